"""Experiment pipelines: desk-scale quantization and energy-expansion runs,
persisted as JSON records, plus CSV plot-data emission."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .energies import energy_F
from .grids import write_binary_grid
from .minimize import make_boundary_data, minimize_F, radial_profile
from .scalar import NonConvergenceError, solve_U
from .s1.rings import j_problem_disc
from .vortices import detect_zeros, pinning_report

RECORD_SCHEMA = 1


@dataclass
class RunRecord:
    kind: str
    config_hash: str
    payload: dict
    timings: dict = field(default_factory=dict)
    version: str = ""
    failed: bool = False
    error: str | None = None

    def to_json(self):
        return {"schema": RECORD_SCHEMA, "kind": self.kind,
                "config_hash": self.config_hash, "version": self.version,
                "failed": self.failed, "error": self.error,
                "payload": self.payload, "timings": self.timings}

    def comparable(self):
        """The reproducible part of the record (timings stripped)."""
        out = self.to_json()
        out.pop("timings")
        return out


def validate_record(data: dict):
    for key in ("schema", "kind", "config_hash", "payload", "failed"):
        if key not in data:
            raise ValueError(f"record missing key {key!r}")
    if data["schema"] != RECORD_SCHEMA:
        raise ValueError(f"unsupported record schema {data['schema']}")
    return data


def _persist(record: RunRecord, out_dir):
    if out_dir is None:
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"record_{record.kind}_{record.config_hash}.json"
    with open(path, "w") as f:
        json.dump(record.to_json(), f, indent=1, sort_keys=True)
    return path


def run_quantization(cfg: ExperimentConfig, out_dir=None, save_fields=False) -> RunRecord:
    """Full pipeline: pinning, special solution, reduced minimisation with
    restarts, zero detection, pinning report and modulus check."""
    timings = {}
    payload = {"eps": cfg.eps_schedule[-1], "d": cfg.d, "seed": cfg.seed}
    record = RunRecord(kind="quantization", config_hash=cfg.config_hash(),
                       payload=payload, timings=timings, version=__version__)
    try:
        eps = cfg.eps_schedule[-1]
        t0 = time.perf_counter()
        a = cfg.build_pinning()
        timings["pinning_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        U = solve_U(a, eps, cfg.solver)
        timings["scalar_s"] = time.perf_counter() - t0
        payload["scalar_bounds"] = [float(U.values[a.domain.active].min()),
                                    float(U.values[a.domain.active].max())]

        g = make_boundary_data(cfg.d, a.domain)
        t0 = time.perf_counter()
        res = minimize_F(U, eps, g, params=cfg.solver, pinning=a,
                         restarts=cfg.restarts, seed=cfg.seed,
                         max_iter=cfg.min_max_iter, tol=cfg.min_tol)
        timings["minimize_s"] = time.perf_counter() - t0
        payload["energy"] = {"dirichlet": res.breakdown.dirichlet,
                             "potential": res.breakdown.potential,
                             "total": res.breakdown.total}
        payload["iterations"] = res.iterations
        payload["residual"] = res.residual
        payload["restarts"] = [
            {k: (list(map(list, v)) if k == "seeds" else v) for k, v in at.items()}
            for at in res.restarts]

        zs = detect_zeros(res.field, cfg.detect_threshold, eps=eps)
        payload["vortices"] = zs.to_json()
        scale = None
        if cfg.pinning_kind != "none":
            scale = cfg.pinning_spec.lam * cfg.pinning_spec.delta
            payload["pinning_report"] = pinning_report(zs, a, scale)
        # modulus floor away from the detected zeros
        X, Y = a.domain.grid.nodes()
        mod = np.abs(res.field.values)
        mask = a.domain.active.copy()
        ball = 4 * scale if scale else 8 * eps
        for z in zs.vortices:
            mask &= np.hypot(X - z.position[0], Y - z.position[1]) >= ball
        payload["modulus_floor"] = {"radius": ball,
                                    "min": float(mod[mask].min()) if mask.any() else None,
                                    "max": float(mod[a.domain.active].max())}
        if save_fields and out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_binary_grid(out / "U.glpf", U.values)
            write_binary_grid(out / "v_re.glpf", res.field.values.real)
            write_binary_grid(out / "v_im.glpf", res.field.values.imag)
    except (NonConvergenceError, ValueError, RuntimeError) as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    _persist(record, out_dir)
    return record


def run_expansion(cfg: ExperimentConfig, out_dir=None) -> RunRecord:
    """Energy-expansion sweep: for each eps, the reduced minimum, the
    rigid-trace hole energy at the detected zero, and the expansion residual
    F - J - d b^2 (pi ln b + gamma)."""
    timings = {}
    record = RunRecord(kind="expansion", config_hash=cfg.config_hash(),
                       payload={}, timings=timings, version=__version__)
    try:
        if cfg.pinning_kind == "none":
            raise ValueError("expansion runs need a pinning term")
        b = cfg.pinning_spec.b
        t0 = time.perf_counter()
        _, _, gamma, ginfo = radial_profile()
        timings["radial_s"] = time.perf_counter() - t0
        rows = []
        a = cfg.build_pinning()
        g = make_boundary_data(cfg.d, a.domain)
        for eps in cfg.eps_schedule:
            t0 = time.perf_counter()
            U = solve_U(a, eps, cfg.solver)
            res = minimize_F(U, eps, g, params=cfg.solver, pinning=a,
                             restarts=cfg.restarts, seed=cfg.seed,
                             max_iter=cfg.min_max_iter, tol=cfg.min_tol)
            zs = detect_zeros(res.field, cfg.detect_threshold, eps=eps)
            if len(zs) != cfg.d:
                raise NonConvergenceError(
                    f"expected {cfg.d} zeros at eps={eps}, found {len(zs)}")
            J = 0.0
            if cfg.d == 1:
                J, _ = j_problem_disc(U, zs.vortices[0].position, eps)
            else:
                from .s1.perforated import PerforatedDomain, minimize_J
                pd = PerforatedDomain(cfg.domain, tuple(zs.positions()), eps)
                J, _ = minimize_J(pd, alpha=U, g=g)
            F = res.breakdown.total
            residual = F - J - cfg.d * b * b * (math.pi * math.log(b) + gamma)
            rows.append({"eps": eps, "F": F, "J": J, "residual": residual,
                         "zeros": [list(z.position) for z in zs.vortices]})
            timings[f"eps_{eps:g}_s"] = time.perf_counter() - t0
        record.payload = {"gamma": gamma,
                          "gamma_self_consistency": abs(ginfo["gamma_at_full"]
                                                        - ginfo["gamma_at_half"]),
                          "b": b, "d": cfg.d, "rows": rows}
    except (NonConvergenceError, ValueError, RuntimeError) as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    _persist(record, out_dir)
    return record


def emit_plots(records, out_dir) -> list:
    """Deterministic CSV bundles from run records; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    vort_path = out / "vortices.csv"
    with open(vort_path, "w") as f:
        f.write("# schema=1\n")
        f.write("config_hash,kind,x,y,degree,inside_inclusion,normalized_boundary_distance\n")
        for rec in records:
            data = rec.to_json() if isinstance(rec, RunRecord) else rec
            payload = data.get("payload", {})
            rep = payload.get("pinning_report")
            if rep:
                for z in rep["zeros"]:
                    f.write(f"{data['config_hash']},{data['kind']},"
                            f"{z['position'][0]:.17g},{z['position'][1]:.17g},"
                            f"{z['degree']},{int(z['inside_inclusion'])},"
                            f"{z['normalized_boundary_distance']:.17g}\n")
            elif "vortices" in payload:
                for z in payload["vortices"]["vortices"]:
                    f.write(f"{data['config_hash']},{data['kind']},"
                            f"{z['position'][0]:.17g},{z['position'][1]:.17g},"
                            f"{z['degree']},,\n")
    written.append(vort_path)

    sweep_path = out / "expansion.csv"
    with open(sweep_path, "w") as f:
        f.write("# schema=1\n")
        f.write("config_hash,eps,F,J,residual\n")
        for rec in records:
            data = rec.to_json() if isinstance(rec, RunRecord) else rec
            if data.get("kind") != "expansion" or data.get("failed"):
                continue
            for row in data["payload"]["rows"]:
                f.write(f"{data['config_hash']},{row['eps']:.17g},{row['F']:.17g},"
                        f"{row['J']:.17g},{row['residual']:.17g}\n")
    written.append(sweep_path)

    manifest = out / "manifest.json"
    with open(manifest, "w") as f:
        json.dump({"schema": 1, "files": [p.name for p in written]}, f, indent=1,
                  sort_keys=True)
    written.append(manifest)
    return written
