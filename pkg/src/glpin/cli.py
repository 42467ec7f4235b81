"""Command-line entry points.

Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
4 IO error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _common(p):
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--out", default="glpin_out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--threads", type=int, default=1,
                   help="numba thread budget (numerics stay serial)")
    p.add_argument("--strict", action="store_true", default=True)
    p.add_argument("--no-strict", dest="strict", action="store_false",
                   help="warn instead of failing on unknown config keys")


def build_parser():
    ap = argparse.ArgumentParser(prog="glpin", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    pin = sub.add_parser("pinning", help="impurity-field commands")
    pin_sub = pin.add_subparsers(dest="subcommand", required=True)
    _common(pin_sub.add_parser("build", help="build and export the impurity field"))

    for name, descr in (
        ("solve-u", "solve the scalar special solution"),
        ("minimize", "minimise the reduced energy"),
        ("analyze", "detect zeros of a stored field"),
        ("ring", "annulus energy (degree and rigid modes)"),
        ("perforated", "perforated-domain minimisation"),
        ("renorm", "renormalized energy of point vortices"),
        ("homogenize", "cell problems and effective matrix"),
        ("quantization", "full quantization pipeline"),
        ("expansion", "energy-expansion sweep"),
        ("plots", "emit CSV plot bundles from stored records"),
    ):
        _common(sub.add_parser(name, help=descr))
    return ap


def _load(args):
    from .config import load_config

    cfg = load_config(args.config, strict=args.strict)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw.setdefault("experiment", {})["seed"] = args.seed
    if args.threads and args.threads > 1:
        try:
            import numba

            numba.set_num_threads(args.threads)
        except Exception:
            pass
    return cfg


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_pinning_build(args):
    from .grids import write_binary_grid, write_csv_field

    cfg = _load(args)
    a = cfg.build_pinning()
    out = _out(args)
    write_binary_grid(out / "pinning.glpf", a.values)
    write_csv_field(out / "pinning.csv", a.domain.grid, a.values, a.domain.active)
    print(f"wrote {out / 'pinning.glpf'} ({len(a.inclusions)} inclusions)")
    return EXIT_OK


def cmd_solve_u(args):
    from .grids import write_binary_grid
    from .scalar import solve_U

    cfg = _load(args)
    a = cfg.build_pinning()
    eps = cfg.eps_schedule[-1]
    U, history = solve_U(a, eps, cfg.solver, return_history=True)
    out = _out(args)
    write_binary_grid(out / "U.glpf", U.values)
    with open(out / "solve_u_history.csv", "w") as f:
        f.write("iteration,residual,energy\n")
        for it, r, e in history:
            f.write(f"{it},{r:.17g},{e:.17g}\n")
    print(f"wrote {out / 'U.glpf'}  bounds "
          f"[{U.values[a.domain.active].min():.6f}, {U.values[a.domain.active].max():.6f}]")
    return EXIT_OK


def cmd_minimize(args):
    from .grids import write_binary_grid
    from .minimize import make_boundary_data, minimize_F
    from .scalar import solve_U

    cfg = _load(args)
    a = cfg.build_pinning()
    eps = cfg.eps_schedule[-1]
    U = solve_U(a, eps, cfg.solver)
    g = make_boundary_data(cfg.d, a.domain)
    res = minimize_F(U, eps, g, params=cfg.solver, pinning=a,
                     restarts=cfg.restarts, seed=cfg.seed,
                     max_iter=cfg.min_max_iter, tol=cfg.min_tol)
    out = _out(args)
    write_binary_grid(out / "U.glpf", U.values)
    write_binary_grid(out / "v_re.glpf", res.field.values.real)
    write_binary_grid(out / "v_im.glpf", res.field.values.imag)
    with open(out / "minimize.json", "w") as f:
        json.dump({"energy": {"dirichlet": res.breakdown.dirichlet,
                              "potential": res.breakdown.potential,
                              "total": res.breakdown.total},
                   "iterations": res.iterations, "residual": res.residual},
                  f, indent=1, sort_keys=True)
    with open(out / "minimize_history.csv", "w") as f:
        f.write("iteration,residual,energy\n")
        for it, r, e in res.history:
            f.write(f"{it},{r:.17g},{e:.17g}\n")
    print(f"wrote {out}/v_re.glpf v_im.glpf  E = {res.energy:.6f}")
    return EXIT_OK


def cmd_analyze(args):
    from .grids import ComplexField, read_binary_grid
    from .vortices import detect_zeros, pinning_report

    cfg = _load(args)
    a = cfg.build_pinning()
    out = _out(args)
    vr = read_binary_grid(out / "v_re.glpf")
    vi = read_binary_grid(out / "v_im.glpf")
    field = ComplexField(a.domain, vr + 1j * vi)
    zs = detect_zeros(field, cfg.detect_threshold, eps=cfg.eps_schedule[-1])
    report = zs.to_json()
    if cfg.pinning_kind != "none":
        scale = cfg.pinning_spec.lam * cfg.pinning_spec.delta
        report["pinning"] = pinning_report(zs, a, scale)
    with open(out / "vortices.json", "w") as f:
        json.dump(report, f, indent=1, sort_keys=True)
    print(f"wrote {out / 'vortices.json'} ({len(zs)} zeros)")
    return EXIT_OK


def cmd_ring(args):
    from .s1.rings import RingSpec, mu_ring

    cfg = _load(args)
    sec = cfg.raw.get("ring")
    if not sec:
        raise ValueError("config needs a [ring] section")
    weight = None
    is_field = False
    if sec.get("weight", "one") == "pinning":
        from .scalar import solve_U

        a = cfg.build_pinning()
        weight = solve_U(a, cfg.eps_schedule[-1], cfg.solver)
        is_field = True
    spec = RingSpec(center=tuple(sec.get("center", (0.0, 0.0))),
                    R=float(sec["R"]), r=float(sec["r"]),
                    degree=int(sec.get("degree", 1)),
                    weight=weight, weight_is_field=is_field)
    sol = mu_ring(spec, sec.get("mode", "degree"))
    out = _out(args)
    with open(out / "ring.json", "w") as f:
        json.dump({"energy": sol.energy, "mode": sol.mode, "degree": sol.degree,
                   "inner_constant": sol.inner_constant,
                   "inner_flux": sol.inner_flux}, f, indent=1, sort_keys=True)
    print(f"mu = {sol.energy:.8f} ({sol.mode})")
    return EXIT_OK


def cmd_perforated(args):
    from .s1.perforated import PerforatedDomain, minimize_I, minimize_J

    cfg = _load(args)
    sec = cfg.raw.get("perforated")
    if not sec:
        raise ValueError("config needs a [perforated] section")
    alpha = None
    if sec.get("weight", "one") == "pinning":
        from .scalar import solve_U

        a = cfg.build_pinning()
        alpha = solve_U(a, cfg.eps_schedule[-1], cfg.solver)
    pd = PerforatedDomain(cfg.domain, tuple(map(tuple, sec["points"])),
                          float(sec["rho"]), use_outer=bool(sec.get("use_outer", False)))
    mode = sec.get("mode", "I")
    flux = None
    if mode == "I":
        e, fphi = minimize_I(pd, alpha=alpha)
    else:
        e, fphi, flux = minimize_J(pd, alpha=alpha, return_flux=True)
    out = _out(args)
    with open(out / "perforated.json", "w") as f:
        json.dump({"energy": e, "mode": mode, "rho": pd.rho,
                   "points": [list(p) for p in pd.points],
                   "hole_flux": flux}, f, indent=1, sort_keys=True)
    print(f"energy = {e:.8f} ({mode})")
    return EXIT_OK


def cmd_renorm(args):
    from .s1.renorm import renormalized_energy

    cfg = _load(args)
    sec = cfg.raw.get("renorm")
    if not sec:
        raise ValueError("config needs a [renorm] section")
    d = cfg.d
    res = renormalized_energy(cfg.domain, lambda th: np.exp(1j * d * th),
                              [tuple(p) for p in sec["points"]],
                              rho_pair=tuple(sec.get("rho_pair", (0.05, 0.025))))
    out = _out(args)
    with open(out / "renorm.json", "w") as f:
        json.dump(res, f, indent=1, sort_keys=True)
    print(f"W = {res['extrapolation']:.8f} (direct {res['direct']:.8f}, "
          f"gap {res['gap']:.2e})")
    return EXIT_OK


def cmd_homogenize(args):
    from .grids import write_binary_grid
    from .homog import homogenized_matrix, inclusion_cell_field

    cfg = _load(args)
    sec = cfg.raw.get("homogenize", {})
    n = int(sec.get("cells", 256))
    if cfg.pinning_kind == "none":
        raise ValueError("homogenize needs a pinning section")
    b = cfg.pinning_spec.b
    lams = sec.get("lambdas", [cfg.pinning_spec.lam])
    out = _out(args)
    results = []
    for lam in lams:
        H = inclusion_cell_field(b, float(lam), n=n,
                                 inclusion=cfg.pinning_spec.inclusion)
        M, chis = homogenized_matrix(H, return_correctors=True)
        results.append({"lambda": float(lam), **M.to_json()})
        write_binary_grid(out / f"chi1_lam{lam:g}.glpf", chis[0])
        write_binary_grid(out / f"chi2_lam{lam:g}.glpf", chis[1])
    with open(out / "homogenized.json", "w") as f:
        json.dump(results, f, indent=1, sort_keys=True)
    for r in results:
        print(f"lambda={r['lambda']}: A = [[{r['a11']:.6f}, {r['a12']:.2e}], "
              f"[{r['a12']:.2e}, {r['a22']:.6f}]]")
    return EXIT_OK


def cmd_quantization(args):
    from .pipeline import run_quantization

    cfg = _load(args)
    rec = run_quantization(cfg, out_dir=args.out, save_fields=True)
    if rec.failed:
        raise RuntimeError(rec.error)
    nz = len(rec.payload["vortices"]["vortices"])
    print(f"quantization: {nz} zeros, energy {rec.payload['energy']['total']:.4f}")
    return EXIT_OK


def cmd_expansion(args):
    from .pipeline import run_expansion

    cfg = _load(args)
    rec = run_expansion(cfg, out_dir=args.out)
    if rec.failed:
        raise RuntimeError(rec.error)
    for row in rec.payload["rows"]:
        print(f"eps={row['eps']:g}  F={row['F']:.4f}  J={row['J']:.4f}  "
              f"residual={row['residual']:.4f}")
    return EXIT_OK


def cmd_plots(args):
    from .pipeline import emit_plots, validate_record

    out = _out(args)
    records = []
    for path in sorted(out.glob("record_*.json")):
        with open(path) as f:
            records.append(validate_record(json.load(f)))
    written = emit_plots(records, out)
    print(f"wrote {len(written)} files to {out}")
    return EXIT_OK


_DISPATCH = {
    "solve-u": cmd_solve_u,
    "minimize": cmd_minimize,
    "analyze": cmd_analyze,
    "ring": cmd_ring,
    "perforated": cmd_perforated,
    "renorm": cmd_renorm,
    "homogenize": cmd_homogenize,
    "quantization": cmd_quantization,
    "expansion": cmd_expansion,
    "plots": cmd_plots,
}


def main(argv=None) -> int:
    from .config import ConfigError
    from .linsolve import LinearSolveError
    from .pinning import SeparationError
    from .scalar import NonConvergenceError

    args = build_parser().parse_args(argv)
    try:
        if args.command == "pinning":
            code = cmd_pinning_build(args)
        else:
            code = _DISPATCH[args.command](args)
        return code
    except (ConfigError, SeparationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonConvergenceError, LinearSolveError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
