"""Damped-Newton solver for the positive special solution of the pinned
scalar equation -lap U = U (a^2 - U^2) / eps^2, U = 1 on the boundary."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .energies import gl_energy_parts, _edge_weights
from .grids import DIRICHLET, FREE, GridDomain, ScalarField
from .linsolve import solve_spd
from .pinning import PinningField


class NonConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-10          # relative EL residual (scaled by eps^2)
    max_iter: int = 60
    damping: float = 1.0        # initial Newton step fraction
    continuation: tuple = (1.0,)  # eps multipliers, applied in order

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


def _dirichlet_stiffness(domain: GridDomain):
    """Sparse Hessian of the unweighted Dirichlet part on free nodes."""
    g = domain.grid
    nx, ny = g.nx, g.ny
    wx, wy = _edge_weights(domain)
    node_id = -np.ones((nx, ny), dtype=np.int64)
    free = domain.node_code == FREE
    node_id[free] = np.arange(int(free.sum()))
    rows, cols, vals = [], [], []
    diag = np.zeros(int(free.sum()))

    def add_edges(w, di, dj):
        ii, jj = np.nonzero(w)
        n0 = node_id[ii, jj]
        n1 = node_id[ii + di, jj + dj]
        wv = 2.0 * w[ii, jj]
        both = (n0 >= 0) & (n1 >= 0)
        rows.extend([n0[both], n1[both]])
        cols.extend([n1[both], n0[both]])
        vals.extend([-wv[both], -wv[both]])
        f0 = n0 >= 0
        np.add.at(diag, n0[f0], wv[f0])
        f1 = n1 >= 0
        np.add.at(diag, n1[f1], wv[f1])

    add_edges(wx, 1, 0)
    add_edges(wy, 0, 1)
    n = diag.size
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    A = A + sp.diags(diag)
    return A, node_id


def solve_U(a: PinningField, eps: float, params: SolverParams | None = None,
            return_history: bool = False):
    """Unique positive solution with boundary value 1; initial guess a itself,
    eps-continuation on stall.  Optionally returns the Newton history as
    (iteration, residual, energy) rows."""
    params = params or SolverParams()
    if eps <= 0:
        raise ValueError("eps must be positive")
    domain = a.domain
    h = domain.grid.h
    if h > eps / 2:
        import warnings
        warnings.warn(f"grid spacing h={h:g} does not resolve eps={eps:g} (want h <= eps/2)")

    schedule = list(params.continuation)
    if schedule[-1] != 1.0:
        schedule.append(1.0)

    U = np.where(a.values < 1.0, a.values, 1.0)
    U[domain.node_code == DIRICHLET] = 1.0
    U[~domain.active] = 1.0

    A_dir, node_id = _dirichlet_stiffness(domain)
    free = domain.node_code == FREE
    history = []
    for mult in schedule:
        U, history = _newton_scalar(U, a, eps * mult, params, domain, A_dir, free, history)
    field = ScalarField(domain, U)
    if return_history:
        return field, history
    return field


def _newton_scalar(U, a, eps, params, domain, A_dir, free, history):
    h = domain.grid.h
    a_sq = a.values ** 2
    pvol = domain.node_vol / (4.0 * eps * eps)
    gr = np.empty_like(U)
    gi = np.empty_like(U)
    scale = eps * eps / h ** 2

    def grad_energy(u):
        e_dir, e_pot = gl_energy_parts(u, domain, eps, pot_target=a_sq, grad_out=(gr, gi))
        return e_dir + e_pot, gr

    energy, g = grad_energy(U)
    res = float(np.max(np.abs(g[free]))) * scale if free.any() else 0.0
    for it in range(params.max_iter):
        if res <= params.tol:
            return U, history
        diag_pot = 4.0 * pvol[free] * (3.0 * U[free] ** 2 - a_sq[free])
        J = A_dir + sp.diags(diag_pot)
        rhs = -g[free]
        try:
            dU = solve_spd(J, rhs, rtol=1e-10)
        except Exception:
            dU = rhs / (A_dir.diagonal() + np.maximum(diag_pot, 1e-30))
        if float(dU @ rhs) <= 0.0:  # not a descent direction: fall back
            dU = rhs / (A_dir.diagonal() + np.abs(diag_pot))
        t = params.damping
        ok = False
        slope = float(-(rhs @ dU))
        for _ in range(30):
            Ut = U.copy()
            Ut[free] += t * dU
            e_dir, e_pot = gl_energy_parts(Ut, domain, eps, pot_target=a_sq)
            et = e_dir + e_pot
            if et <= energy + 1e-4 * t * slope + 1e-14 * abs(energy):
                ok = True
                break
            t *= 0.5
        if not ok:
            raise NonConvergenceError(
                f"scalar Newton stalled at eps={eps:g}", residual=res, history=history)
        U = Ut
        energy, g = grad_energy(U)
        res = float(np.max(np.abs(g[free]))) * scale
        history.append((len(history), res, energy))
    if res <= params.tol:
        return U, history
    raise NonConvergenceError(
        f"scalar Newton did not converge after {params.max_iter} iterations",
        residual=res, history=history)


def closeness_report(U: ScalarField, a: PinningField, eps: float, radii) -> list:
    """Per radius R: max |U - a| over nodes at analytic distance >= R from the
    impurity boundary (None when the region is empty)."""
    if U.domain is not a.domain and U.domain.grid != a.domain.grid:
        raise ValueError("fields must share a grid")
    domain = U.domain
    X, Y = domain.grid.nodes()
    dist = a.boundary_distance(X, Y)
    inside = domain.node_code == FREE
    gap = np.abs(U.values - a.values)
    out = []
    for R in radii:
        mask = inside & (dist >= R)
        if not mask.any():
            out.append((float(R), None))
        else:
            out.append((float(R), float(gap[mask].max())))
    return out
