"""Minimisation of the reduced Ginzburg-Landau energy over complex fields
with a fixed unimodular boundary trace of prescribed winding.

Optimizer: Polak-Ribiere nonlinear conjugate gradient with Armijo line
search on the exact discrete gradient, eps-continuation and seeded random
restarts; Barzilai-Borwein gradient steps are the safeguard direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energies import EnergyBreakdown, energy_F, gl_energy_parts
from .grids import DIRICHLET, FREE, ComplexField, GridDomain, ScalarField
from .linsolve import PhaseProblem
from .pinning import PinningField
from .scalar import NonConvergenceError, SolverParams


@dataclass(frozen=True)
class BoundaryData:
    """Unimodular Dirichlet trace with integer winding, stored on the grid."""

    degree: int
    values: np.ndarray           # complex, meaningful on Dirichlet nodes
    winding: int

    def trace_on(self, code):
        return np.where(code == DIRICHLET, self.values, 0.0)


def boundary_winding(domain: GridDomain, values: np.ndarray) -> int:
    """Winding of a unimodular trace along the angular boundary loop."""
    loop = domain.boundary_loop()
    vals = values[loop[:, 0], loop[:, 1]]
    vals = np.concatenate([vals, vals[:1]])
    dphase = np.angle(vals[1:] / vals[:-1])
    return int(round(float(np.sum(dphase)) / (2.0 * math.pi)))


def make_boundary_data(d: int, domain: GridDomain) -> BoundaryData:
    """Trace exp(i d theta) about the domain centroid, evaluated at the
    nearest-boundary projection of each Dirichlet node."""
    g = domain.grid
    X, Y = g.nodes()
    px, py = domain.dom.project_boundary(X, Y)
    cx, cy = domain.dom.center
    theta = np.arctan2(py - cy, px - cx)
    values = np.exp(1j * d * theta)
    w = boundary_winding(domain, values)
    return BoundaryData(degree=d, values=values, winding=w)


def boundary_phase_shift(domain: GridDomain, g_values: np.ndarray, centers, degrees):
    """Single-valued boundary phase phi0 with exp(i(theta0 + phi0)) = g,
    unwrapped along the boundary loop; errors out when the windings are
    incompatible (deg g != sum of degrees)."""
    loop = domain.boundary_loop()
    pts_x = domain.grid.x0 + loop[:, 0] * domain.grid.h
    pts_y = domain.grid.y0 + loop[:, 1] * domain.grid.h
    gv = g_values[loop[:, 0], loop[:, 1]]
    theta0 = np.zeros(len(loop))
    for (cx, cy), d in zip(centers, degrees):
        theta0 += d * np.arctan2(pts_y - cy, pts_x - cx)
    w = gv * np.exp(-1j * theta0)
    phi = np.angle(w[0]) + np.concatenate([[0.0], np.cumsum(np.angle(w[1:] / w[:-1]))])
    closure = phi[0] - (phi[-1] + np.angle(w[0] / w[-1]))
    if abs(closure) > math.pi:
        raise ValueError(
            "incompatible degrees: the boundary winding of g must equal the sum "
            "of the hole degrees")
    out = np.zeros(g_values.shape)
    out[loop[:, 0], loop[:, 1]] = phi
    return out


def pick_vortex_seeds(d: int, domain: GridDomain, pinning: PinningField | None):
    """Default seed positions: the d inclusion centers closest to the domain
    centroid (lexicographic tie-break), or a symmetric ring without pinning."""
    cx, cy = domain.dom.center
    if pinning is not None and len(pinning.inclusions) >= d:
        centers = sorted((inc.center for inc in pinning.inclusions),
                         key=lambda c: (math.hypot(c[0] - cx, c[1] - cy), c[0], c[1]))
        return [tuple(c) for c in centers[:d]]
    hx, hy = domain.dom.half_extent
    r = 0.35 * min(hx, hy)
    if d == 1:
        return [(cx, cy)]
    return [(cx + r * math.cos(2 * math.pi * k / d),
             cy + r * math.sin(2 * math.pi * k / d)) for k in range(d)]


def initial_guess(domain: GridDomain, g: BoundaryData, seeds, eps: float, b: float):
    """Product of degree-1 vortices at the seeds, phase-corrected to match g
    on the boundary, with tanh core profiles of width eps/b."""
    degrees = [1] * len(seeds)
    phi0 = boundary_phase_shift(domain, g.values, seeds, degrees)
    problem = PhaseProblem(domain, coeff=None, centers=seeds, degrees=degrees,
                           dirichlet_values=phi0)
    phi_active, _ = problem.solve(rtol=1e-8)
    phi = problem.phi_grid(phi_active)
    phi = np.where(np.isnan(phi), 0.0, phi)
    X, Y = domain.grid.nodes()
    theta0 = np.zeros_like(X)
    modulus = np.ones_like(X)
    for (sx, sy) in seeds:
        r = np.hypot(X - sx, Y - sy)
        theta0 += np.arctan2(Y - sy, X - sx)
        modulus *= np.tanh(r * b / max(eps, 1e-12))
    v = modulus * np.exp(1j * (theta0 + phi))
    v[domain.node_code == DIRICHLET] = g.values[domain.node_code == DIRICHLET]
    return v


class MinimizeResult:
    def __init__(self, field, energy, breakdown, iterations, residual, history,
                 restarts=None):
        self.field = field
        self.energy = energy
        self.breakdown = breakdown
        self.iterations = iterations
        self.residual = residual
        self.history = history
        self.restarts = restarts or []


def _ncg(v, domain, Usq, U4, eps, g_trace, b, tol, max_iter):
    """Minimise F over free nodes; returns (v, energy, iters, residual, hist)."""
    from .energies import _edge_weights
    from .kernels import energy_grad

    free = domain.node_code == FREE
    h2 = domain.grid.h ** 2
    scale = eps * eps / (h2 * max(b, 1e-6) ** 4)
    # frozen kernel inputs for this stage
    wx, wy = _edge_weights(domain, Usq)
    pvol = np.ascontiguousarray(domain.node_vol / (4.0 * eps * eps) * U4)
    ptar = np.ones_like(pvol)
    gr = np.empty_like(pvol)
    gi = np.empty_like(pvol)

    # Jacobi preconditioner: Hessian diagonal at |v| = 1
    ddiag = 8.0 * pvol
    ddiag[:-1, :] += 2.0 * wx
    ddiag[1:, :] += 2.0 * wx
    ddiag[:, :-1] += 2.0 * wy
    ddiag[:, 1:] += 2.0 * wy
    prec = 1.0 / np.concatenate([ddiag[free], ddiag[free]])

    vr = np.ascontiguousarray(v.real)
    vi = np.ascontiguousarray(v.imag)

    def eval_eg(ur, ui, want_grad=True):
        e_dir, e_pot = energy_grad(ur, ui, wx, wy, pvol, ptar, gr, gi, want_grad)
        return e_dir + e_pot

    energy = eval_eg(vr, vi)
    gvec = np.concatenate([gr[free], gi[free]])
    res = float(np.max(np.abs(gvec))) * scale
    z = prec * gvec
    d = -z
    g_old = gvec
    z_old = z
    t_prev = None
    hist = [(0, res, energy)]
    nfree = int(free.sum())
    tr = np.empty_like(vr)
    ti = np.empty_like(vi)
    it = 0
    floor_hit = False
    while it < max_iter and res > tol:
        slope = float(gvec @ d)
        if slope >= 0:
            d = -gvec
            slope = float(gvec @ d)

        def try_direction(dd, ss, t0):
            t = t0
            for _ in range(50):
                np.copyto(tr, vr)
                np.copyto(ti, vi)
                tr[free] += t * dd[:nfree]
                ti[free] += t * dd[nfree:]
                e_t = eval_eg(tr, ti, want_grad=False)
                if e_t <= energy + 1e-4 * t * ss:
                    return t
                t *= 0.5
            return None

        t0 = 1.0 if t_prev is None else t_prev * 2.0
        t = try_direction(d, slope, t0)
        if t is None and slope < 0:
            # conjugate direction noise-limited: retry along the gradient
            d = -(prec * gvec)
            slope = float(gvec @ d)
            t = try_direction(d, slope, 1.0)
        if t is None:
            # even steepest descent cannot decrease the energy in float64:
            # the discrete minimum is resolved to machine precision
            floor_hit = True
            break
        t_prev = t
        vr, tr = tr, vr
        vi, ti = ti, vi
        energy = eval_eg(vr, vi)
        g_new = np.concatenate([gr[free], gi[free]])
        res = float(np.max(np.abs(g_new))) * scale
        z_new = prec * g_new
        beta = float(g_new @ (z_new - z_old)) / max(float(g_old @ z_old), 1e-300)
        beta = max(0.0, beta)
        d = -z_new + beta * d
        g_old = g_new
        z_old = z_new
        gvec = g_new
        it += 1
        if it % 25 == 0 or res <= tol:
            hist.append((it, res, energy))
    return vr + 1j * vi, energy, it, res, hist, floor_hit


def minimize_F(U: ScalarField, eps: float, g: BoundaryData,
               params: SolverParams | None = None,
               pinning: PinningField | None = None,
               seeds=None, restarts: int = 3, seed: int = 0,
               max_iter: int = 4000, tol: float | None = None) -> MinimizeResult:
    """Best-of-restarts NCG minimisation of the reduced energy.

    Restart 0 starts from vortices at the default seeds; later restarts
    perturb each seed by a uniform offset up to one pinning period.
    """
    params = params or SolverParams()
    domain = U.domain
    d = g.degree
    if d == 0:
        base_seeds = []
    else:
        base_seeds = list(seeds) if seeds is not None else pick_vortex_seeds(d, domain, pinning)
    b = float(pinning.b) if pinning is not None else float(np.min(U.values))
    b = min(max(b, 1e-3), 1.0)
    tol = tol if tol is not None else max(params.tol, 1e-6)
    Usq = U.values ** 2
    U4 = Usq * Usq
    rng = np.random.default_rng(seed)
    perturb = getattr(pinning, "spec", None)
    delta = getattr(perturb, "delta", 0.1) if perturb is not None else 0.1

    schedule = list(params.continuation)
    if schedule[-1] != 1.0:
        schedule.append(1.0)

    best = None
    attempts = []
    for k in range(max(1, restarts)):
        if k == 0 or not base_seeds:
            sds = list(base_seeds)
        else:
            sds = []
            for (sx, sy) in base_seeds:
                for _ in range(100):
                    cand = (sx + rng.uniform(-delta, delta), sy + rng.uniform(-delta, delta))
                    if bool(domain.dom.contains(cand[0], cand[1], -2 * domain.grid.h)):
                        break
                sds.append(cand)
        if sds:
            v = initial_guess(domain, g, sds, eps * schedule[0], b)
        else:
            v = np.ones(U.values.shape, dtype=complex)
            v[domain.node_code == DIRICHLET] = g.values[domain.node_code == DIRICHLET]
        v[~domain.active] = 1.0
        total_it = 0
        floor = False
        for mult in schedule:
            stage_tol = tol if mult == 1.0 else max(tol * 30, 1e-4)
            v, energy, it, res, hist, floor = _ncg(v, domain, Usq, U4, eps * mult,
                                                   g, b, stage_tol, max_iter)
            total_it += it
        attempts.append({"restart": k, "seeds": sds, "energy": energy,
                         "iterations": total_it, "residual": res,
                         "at_float_floor": floor})
        if best is None or energy < best[0] - 1e-12:
            best = (energy, v, total_it, res, hist, floor)
    energy, v, total_it, res, hist, floor = best
    if res > tol and not floor and res > tol * 50:
        raise NonConvergenceError(
            f"reduced-energy minimisation stalled: residual {res:.3e} (tol {tol:g})",
            residual=res, history=hist)
    field = ComplexField(domain, v)
    breakdown = energy_F(field, U, eps)
    return MinimizeResult(field, energy, breakdown, total_it, res, hist, attempts)


def radial_profile(r_max: float = 60.0, n: int = 6000):
    """Degree-1 radial core profile and the core-energy constant.

    Solves f'' + f'/r - f/r^2 + f(1-f^2) = 0, f(0)=0 with the far-field
    asymptote, then estimates gamma = lim_R [E(B_R) - pi ln R] by Richardson
    extrapolation over R_max/2 and R_max.
    Returns (r, f, gamma, info).
    """
    if r_max < 20:
        raise ValueError("r_max must be at least 20")
    r = np.linspace(0.0, r_max, n + 1)
    hr = r[1] - r[0]
    f = r / np.sqrt(r * r + 2.0)
    f_end = 1.0 - 1.0 / (2 * r_max ** 2) - 9.0 / (8 * r_max ** 4)
    f[0], f[-1] = 0.0, f_end
    rm = 0.5 * (r[1:] + r[:-1])   # edge midpoints

    def residual(fv):
        dfv = np.diff(fv) / hr
        flux = rm * dfv
        res = np.zeros_like(fv)
        res[1:-1] = (flux[1:] - flux[:-1]) / hr
        res[1:-1] += -fv[1:-1] / r[1:-1] ** 2 * r[1:-1] + r[1:-1] * fv[1:-1] * (1 - fv[1:-1] ** 2)
        return res

    for _ in range(80):
        res = residual(f)
        rn = float(np.max(np.abs(res[1:-1])))
        if rn < 1e-9:
            break
        main = -(rm[1:] + rm[:-1]) / hr ** 2 - 1.0 / r[1:-1] + r[1:-1] * (1 - 3 * f[1:-1] ** 2)
        lower = rm[1:-1] / hr ** 2
        upper = rm[1:-1] / hr ** 2
        A = sp.diags([lower, main, upper], [-1, 0, 1], format="csc")
        df = spla.spsolve(A, -res[1:-1])
        step = 1.0
        nrm0 = np.linalg.norm(res[1:-1])
        for _ in range(30):
            ft = f.copy()
            ft[1:-1] += step * df
            if np.linalg.norm(residual(ft)[1:-1]) <= (1 - 1e-4 * step) * nrm0:
                break
            step *= 0.5
        f = ft
    else:
        raise NonConvergenceError("radial profile Newton did not converge", residual=rn)

    def core_energy(R):
        k = int(round(R / hr))
        fr = f[: k + 1]
        rr = r[: k + 1]
        dfv = np.diff(fr) / hr
        e_edge = np.sum(dfv * dfv * 0.5 * (rr[1:] + rr[:-1])) * hr
        dens = np.zeros_like(fr)
        dens[1:] = fr[1:] ** 2 / rr[1:]
        dens += 0.5 * (1 - fr ** 2) ** 2 * rr
        e_node = np.trapezoid(dens, dx=hr)
        return math.pi * (e_edge + e_node)

    g_half = core_energy(r_max / 2) - math.pi * math.log(r_max / 2)
    g_full = core_energy(r_max) - math.pi * math.log(r_max)
    gamma = (4.0 * g_full - g_half) / 3.0
    info = {"gamma_at_half": g_half, "gamma_at_full": g_full,
            "f_end": float(f[-1]), "newton_residual": rn}
    return r, f, gamma, info
