"""Degree-constrained and rigid-trace minimisation on perforated domains.

Both problems are linear in the phase representation exp(i(theta0 + phi)):
the degree problem leaves hole-boundary values free (natural condition),
the rigid problem ties each hole ring to one floating constant which joins
the linear system as an extra unknown, so the optimal rotations come out of
a single solve; the weighted flux through each hole boundary is reported as
the optimality check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grids import DIRICHLET, DomainSpec, GridDomain, ScalarField
from ..linsolve import PhaseProblem
from ..minimize import BoundaryData, boundary_phase_shift, make_boundary_data


@dataclass(frozen=True)
class PerforatedDomain:
    """Base domain with discs of radius rho removed around the given points.

    use_outer extends the computational region by the domain margin; the
    trace is then frozen to the boundary-data extension over the collar.
    """

    dom: DomainSpec
    points: tuple
    rho: float
    use_outer: bool = False

    def __post_init__(self):
        pts = [(float(p[0]), float(p[1])) for p in self.points]
        for k, p in enumerate(pts):
            if float(self.dom.boundary_distance(p[0], p[1])) <= self.rho:
                raise ValueError(f"hole {k} is not contained in the domain")
            for q in pts[k + 1:]:
                if math.hypot(p[0] - q[0], p[1] - q[1]) < 8 * self.rho:
                    raise ValueError("holes must be pairwise >= 8 rho apart")

    def grid_domain(self) -> GridDomain:
        holes = [((float(p[0]), float(p[1])), self.rho) for p in self.points]
        dil = self.dom.margin if self.use_outer else 0.0
        gd = GridDomain(self.dom, holes=holes, dilation=dil)
        if min(self.rho, 1.0) < 2 * self.dom.h:
            raise ValueError("points too close for the grid: rho must span >= 2 cells")
        return gd


@dataclass
class PhaseField:
    """Multivalued phase: canonical singular part (centers, degrees) plus a
    single-valued correction on the grid."""

    centers: tuple
    degrees: tuple
    phi: np.ndarray
    domain: GridDomain

    def map_values(self):
        """The represented unimodular map exp(i(theta0 + phi))."""
        X, Y = self.domain.grid.nodes()
        theta0 = np.zeros_like(X)
        for (cx, cy), d in zip(self.centers, self.degrees):
            theta0 += d * np.arctan2(Y - cy, X - cx)
        out = np.exp(1j * (theta0 + np.where(np.isnan(self.phi), 0.0, self.phi)))
        out[~self.domain.active] = 1.0
        return out


def _weight_nodes(alpha, domain: GridDomain):
    if alpha is None:
        return None
    if isinstance(alpha, ScalarField):
        return alpha.values ** 2
    a = np.asarray(alpha, dtype=float)
    if a.shape == (domain.grid.nx, domain.grid.ny):
        return a
    raise ValueError("weight must be None, a ScalarField (squared), or a node array")


def _collar_dirichlet(domain: GridDomain, g: BoundaryData, centers, degrees):
    """Dirichlet mask/values on the collar outside the base domain, carrying
    the phase of the boundary extension; unwrapped by breadth-first search."""
    g_grid = domain.grid
    X, Y = g_grid.nodes()
    inside = domain.dom.contains(X, Y)
    collar = domain.active & ~inside
    if not collar.any():
        return None, None
    d = sum(degrees)
    cx, cy = domain.dom.center
    # target phase increments: d*theta_global - theta0, both smooth per edge
    values = np.zeros(X.shape)
    seen = np.zeros(X.shape, dtype=bool)
    from collections import deque
    ii, jj = np.nonzero(collar)
    start = (int(ii[0]), int(jj[0]))

    def phase_inc(p, q):
        # principal increment of (d*theta_global - theta0) along edge p -> q
        zp = complex(X[p] - cx, Y[p] - cy)
        zq = complex(X[q] - cx, Y[q] - cy)
        inc = d * float(np.angle(zq / zp))
        for (vx, vy), dv in zip(centers, degrees):
            wp = complex(X[p] - vx, Y[p] - vy)
            wq = complex(X[q] - vx, Y[q] - vy)
            inc -= dv * float(np.angle(wq / wp))
        return inc

    theta_g = math.atan2(Y[start] - cy, X[start] - cx)
    anchor = d * theta_g
    for (vx, vy), dv in zip(centers, degrees):
        anchor -= dv * math.atan2(Y[start] - vy, X[start] - vx)
    values[start] = anchor
    seen[start] = True
    dq = deque([start])
    nx, ny = g_grid.nx, g_grid.ny
    while dq:
        p = dq.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            q = (p[0] + di, p[1] + dj)
            if 0 <= q[0] < nx and 0 <= q[1] < ny and collar[q] and not seen[q]:
                values[q] = values[p] + phase_inc(p, q)
                seen[q] = True
                dq.append(q)
    return collar & seen, values


def _solve(dom: PerforatedDomain, alpha, degrees, g: BoundaryData | None,
           hole_mode: str, rtol: float = 1e-12):
    gd = dom.grid_domain()
    centers = [(float(p[0]), float(p[1])) for p in dom.points]
    degrees = [int(d) for d in degrees]
    if g is None:
        g = make_boundary_data(sum(degrees), gd)
    if g.winding != sum(degrees):
        raise ValueError(
            "compatibility failure: deg(g) on the boundary must equal the sum "
            "of the hole degrees")
    weight = _weight_nodes(alpha, gd)
    phi0 = boundary_phase_shift(gd, g.values, centers, degrees)
    extra = None
    if dom.use_outer:
        collar, collar_vals = _collar_dirichlet(gd, g, centers, degrees)
        if collar is not None:
            extra = collar
            phi0 = np.where(collar, collar_vals, phi0)
    problem = PhaseProblem(gd, coeff=weight, centers=centers, degrees=degrees,
                           dirichlet_values=phi0, hole_mode=hole_mode,
                           extra_dirichlet=extra)
    phi_active, _ = problem.solve(rtol=rtol)
    energy = problem.energy(phi_active)
    field = PhaseField(centers=tuple(centers), degrees=tuple(degrees),
                       phi=problem.phi_grid(phi_active), domain=gd)
    flux = problem.hole_flux(phi_active)
    return energy, field, flux


def minimize_I(dom: PerforatedDomain, alpha=None, degrees=None,
               g: BoundaryData | None = None, rtol: float = 1e-12):
    """Infimum of (1/2) int alpha |grad w|^2 over maps with prescribed hole
    windings and trace g (natural conditions on the hole boundaries)."""
    if degrees is None:
        degrees = [1] * len(dom.points)
    energy, field, flux = _solve(dom, alpha, degrees, g, "free", rtol)
    return energy, field


def minimize_J(dom: PerforatedDomain, alpha=None, g: BoundaryData | None = None,
               rtol: float = 1e-12, return_flux: bool = False):
    """Rigid-trace variant: w restricted to rotations of exp(i theta) on each
    hole circle with the rotation constants optimised in the same solve."""
    degrees = [1] * len(dom.points)
    energy, field, flux = _solve(dom, alpha, degrees, g, "rigid", rtol)
    if return_flux:
        return energy, field, flux
    return energy, field


def optimal_centers_search(alpha, rho: float, d: int, init,
                           dom_spec: DomainSpec, g: BoundaryData | None = None,
                           step0: float | None = None, max_iter: int = 200,
                           rtol: float = 1e-10):
    """Pattern search over hole centers, re-solving the rigid-trace problem
    per trial configuration, until the step falls below the grid spacing."""
    h = dom_spec.h
    pts = [(float(p[0]), float(p[1])) for p in init]
    if len(pts) != d:
        raise ValueError("init must supply exactly d centers")
    step = step0 if step0 is not None else 8 * h
    cache = {}

    def feasible(cand):
        for k, p in enumerate(cand):
            if float(dom_spec.boundary_distance(p[0], p[1])) <= 8 * rho:
                return False
            for q in cand[k + 1:]:
                if math.hypot(p[0] - q[0], p[1] - q[1]) < 8 * rho:
                    return False
        return True

    def evaluate(cand):
        key = tuple((round(p[0] / (h / 4)), round(p[1] / (h / 4))) for p in cand)
        if key not in cache:
            pd = PerforatedDomain(dom_spec, tuple(cand), rho)
            cache[key] = minimize_J(pd, alpha=alpha, g=g, rtol=rtol)[0]
        return cache[key]

    if not feasible(pts):
        raise ValueError("initial centers violate the separation constraints")
    best = evaluate(pts)
    evals = 1
    for _ in range(max_iter):
        improved = False
        for k in range(d):
            for dx, dy in ((step, 0), (-step, 0), (0, step), (0, -step)):
                cand = list(pts)
                cand[k] = (pts[k][0] + dx, pts[k][1] + dy)
                if not feasible(cand):
                    continue
                e = evaluate(cand)
                evals += 1
                if e < best - 1e-12:
                    pts, best = cand, e
                    improved = True
        if not improved:
            step *= 0.5
            if step < h:
                break
    return [tuple(p) for p in pts], best
