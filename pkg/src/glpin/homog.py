"""Periodic cell problems, effective coefficient matrix, and the unfolding
operator.

The cell coefficient lives on an n x n grid of cells over the unit cell
(0,1)^2, correctors on the matching periodic node grid; edge coefficients
are cell averages, which reproduces laminates exactly.  The effective
matrix is assembled from the energy form, so it is symmetric positive
definite by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grids import Grid, GridDomain, ScalarField
from .linsolve import PhaseProblem, solve_spd
from .pinning import UnitInclusion


@dataclass(frozen=True)
class CellField:
    """Periodic coefficient on the unit cell: values[i, j] on cell
    ((i, i+1) x (j, j+1)) / n, constrained to [b_min^2, 1]-type ranges."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("cell field must be square")
        if not np.all(np.isfinite(v)) or v.min() <= 0:
            raise ValueError("cell coefficient must be positive and finite")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def inclusion_cell_field(b: float, lam: float, n: int = 256,
                         inclusion: UnitInclusion | None = None) -> CellField:
    """Squared pinning coefficient on the shifted unit cell (0,1)^2, whose
    periodic extension has quarter-inclusions at the cell corners (the cell
    convention of the unfolding construction)."""
    inc = inclusion or UnitInclusion()
    xc = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xc, xc, indexing="ij")
    # wrap to (-1/2, 1/2)^2: inclusion sits at the lattice points
    Xw = (X + 0.5) % 1.0 - 0.5
    Yw = (Y + 0.5) % 1.0 - 0.5
    inside = inc.contains_unit(Xw / lam, Yw / lam) if lam > 0 else np.zeros_like(X, bool)
    vals = np.where(inside, b * b, 1.0)
    return CellField(vals)


@dataclass(frozen=True)
class HomogenizedMatrix:
    a11: float
    a12: float
    a22: float
    asymmetry: float = 0.0

    def as_array(self):
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.as_array())

    def to_json(self):
        return {"a11": self.a11, "a12": self.a12, "a22": self.a22,
                "asymmetry": self.asymmetry}


def _periodic_system(H: np.ndarray):
    """Stiffness of the periodic edge form sum H_e (du)^2 with H_e the mean
    of the two adjacent cells, plus the per-direction edge weights."""
    n = H.shape[0]
    N = n * n

    def nid(i, j):
        return (i % n) * n + (j % n)

    # x-edge (i,j)->(i+1,j): adjacent cells (i, j-1), (i, j)
    wx = 0.5 * (H + np.roll(H, 1, axis=1))
    # y-edge (i,j)->(i,j+1): adjacent cells (i-1, j), (i, j)
    wy = 0.5 * (H + np.roll(H, 1, axis=0))
    rows, cols, vals = [], [], []
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for (w, di, dj) in ((wx, 1, 0), (wy, 0, 1)):
        n0 = (ii * n + jj).ravel()
        n1 = (((ii + di) % n) * n + (jj + dj) % n).ravel()
        wv = 2.0 * w.ravel() / (n * n) * (n * n)  # h^2/h^2: dimensionless
        rows.extend([n0, n1, n0, n1])
        cols.extend([n0, n1, n1, n0])
        vals.extend([wv, wv, -wv, -wv])
    A = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return A, wx, wy


def solve_cell(H0: CellField, j: int, rtol: float = 1e-12) -> np.ndarray:
    """Periodic corrector for direction j in {1, 2}: the edge form equals
    that of div(H grad chi) = d_j H in flux form, with exactly zero mean."""
    if j not in (1, 2):
        raise ValueError("direction j must be 1 or 2")
    H = H0.values
    n = H.n if isinstance(H, CellField) else H.shape[0]
    A, wx, wy = _periodic_system(H)
    h = 1.0 / n
    # rhs: a(chi, psi) = sum over j-edges of 2 w_e * h * dpsi
    b = np.zeros(n * n)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    if j == 1:
        n0 = (ii * n + jj).ravel()
        n1 = (((ii + 1) % n) * n + jj).ravel()
        wv = 2.0 * wx.ravel() * h
    else:
        n0 = (ii * n + jj).ravel()
        n1 = (ii * n + (jj + 1) % n).ravel()
        wv = 2.0 * wy.ravel() * h
    np.subtract.at(b, n0, wv)
    np.add.at(b, n1, wv)
    # singular system: project out constants via a pinned node + mean shift
    N = n * n
    keep = np.arange(1, N)
    Ar = A[keep][:, keep].tocsr()
    x = solve_spd(Ar, b[keep], rtol=rtol)
    chi = np.zeros(N)
    chi[keep] = x
    chi -= chi.mean()
    return chi.reshape(n, n)


def _form_energy(H: np.ndarray, u_edges_x, u_edges_y, v_edges_x, v_edges_y):
    n = H.shape[0]
    wx = 0.5 * (H + np.roll(H, 1, axis=1))
    wy = 0.5 * (H + np.roll(H, 1, axis=0))
    return float(np.sum(wx * u_edges_x * v_edges_x) + np.sum(wy * u_edges_y * v_edges_y))


def homogenized_matrix(H0: CellField, rtol: float = 1e-12,
                       return_correctors: bool = False):
    """Effective matrix int H (Id - grad chi) via the energy form
    a(y_i - chi_i, y_j - chi_j), symmetric PSD by construction."""
    H = H0.values
    n = H.shape[0]
    h = 1.0 / n
    chis = [solve_cell(H0, 1, rtol), solve_cell(H0, 2, rtol)]
    ex, ey = [], []
    for k, chi in enumerate(chis):
        dx = np.roll(chi, -1, axis=0) - chi      # along e1
        dy = np.roll(chi, -1, axis=1) - chi      # along e2
        shift_x = h if k == 0 else 0.0
        shift_y = h if k == 1 else 0.0
        ex.append(shift_x - dx)
        ey.append(shift_y - dy)
    # a(u, v) = sum_e w_e du dv: the h^2 edge ownership cancels the 1/h^2 of
    # the difference quotients on the unit cell
    A = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            A[i, j] = _form_energy(H, ex[i], ey[i], ex[j], ey[j])
    asym = abs(A[0, 1] - A[1, 0])
    a12 = 0.5 * (A[0, 1] + A[1, 0])
    M = HomogenizedMatrix(a11=float(A[0, 0]), a12=float(a12), a22=float(A[1, 1]),
                          asymmetry=float(asym))
    if return_correctors:
        return M, chis
    return M


@dataclass
class UnfoldedField:
    """Samples T(phi)(x, y): block (kx, ky) holds the m x m node values of the
    delta-cell, zero on cells not fully inside the region."""

    blocks: np.ndarray       # (ncx, ncy, m, m)
    cell_mask: np.ndarray    # (ncx, ncy) True where the delta-cell is inside
    delta: float

    def integral(self) -> float:
        """Grid integral over region x unit cell; matches the folded integral
        bit-for-bit on aligned grids."""
        m = self.blocks.shape[2]
        h = self.delta / m
        folded = self.blocks.transpose(0, 2, 1, 3).reshape(
            self.blocks.shape[0] * m, self.blocks.shape[1] * m)
        return float(np.sum(folded) * h * h)


def unfold(field: ScalarField, delta: float, region_mask=None) -> UnfoldedField:
    """Exact re-indexing of a grid function into per-cell blocks.

    delta must be a positive integer multiple of the grid spacing and cells
    are anchored at integer multiples of delta; cells crossing the region
    boundary are zeroed (the boundary-layer convention)."""
    g = field.domain.grid
    m_f = delta / g.h
    m = int(round(m_f))
    if m < 1 or abs(m_f - m) > 1e-9:
        raise ValueError("delta must be a positive multiple of the grid spacing")
    # anchor: cell corners at integer multiples of delta
    i0 = int(math.ceil((0.0 - g.x0) / delta - 1e-12))
    j0 = int(math.ceil((0.0 - g.y0) / delta - 1e-12))
    base_i = int(round((i0 * delta - g.x0) / g.h))
    base_j = int(round((j0 * delta - g.y0) / g.h))
    first_i = base_i
    while first_i - m >= 0:
        first_i -= m
    first_j = base_j
    while first_j - m >= 0:
        first_j -= m
    ncx = (g.nx - first_i) // m
    ncy = (g.ny - first_j) // m
    if region_mask is None:
        region_mask = field.domain.active
    blocks = np.zeros((ncx, ncy, m, m))
    cmask = np.zeros((ncx, ncy), dtype=bool)
    vals = field.values
    for kx in range(ncx):
        for ky in range(ncy):
            sl = (slice(first_i + kx * m, first_i + (kx + 1) * m),
                  slice(first_j + ky * m, first_j + (ky + 1) * m))
            inside = bool(region_mask[sl].all())
            cmask[kx, ky] = inside
            if inside:
                blocks[kx, ky] = vals[sl]
    return UnfoldedField(blocks=blocks, cell_mask=cmask, delta=delta)


def folded_integral(field: ScalarField, delta: float, region_mask=None) -> float:
    """Grid integral of the field over the union of complete delta-cells,
    assembled directly from the folded values in the same array layout as
    UnfoldedField.integral (bitwise identical on aligned grids)."""
    uf = unfold(field, delta, region_mask)
    g = field.domain.grid
    m = int(round(delta / g.h))
    i0 = int(math.ceil((0.0 - g.x0) / delta - 1e-12))
    base_i = int(round((i0 * delta - g.x0) / g.h))
    first_i = base_i
    while first_i - m >= 0:
        first_i -= m
    j0 = int(math.ceil((0.0 - g.y0) / delta - 1e-12))
    base_j = int(round((j0 * delta - g.y0) / g.h))
    first_j = base_j
    while first_j - m >= 0:
        first_j -= m
    ncx, ncy = uf.cell_mask.shape
    folded = np.zeros((ncx * m, ncy * m))
    for kx in range(ncx):
        for ky in range(ncy):
            if uf.cell_mask[kx, ky]:
                folded[kx * m:(kx + 1) * m, ky * m:(ky + 1) * m] = \
                    field.values[first_i + kx * m: first_i + (kx + 1) * m,
                                 first_j + ky * m: first_j + (ky + 1) * m]
    return float(np.sum(folded) * g.h * g.h)


def homogenized_phase(A: HomogenizedMatrix, domain: GridDomain, points, g_values,
                      degrees=None, rtol: float = 1e-12):
    """Constant-coefficient phase problem -div(A grad(theta0 + phi)) = 0 with
    phi = phi0 on the boundary (the S^1 harmonic-map equation in phase form).
    Returns (phi grid, energy)."""
    from .minimize import boundary_phase_shift

    centers = [(float(p[0]), float(p[1])) for p in points]
    if degrees is None:
        degrees = [1] * len(centers)
    phi0 = boundary_phase_shift(domain, g_values, centers, degrees)
    problem = PhaseProblem(domain, coeff=A.as_array(), centers=centers,
                           degrees=degrees, dirichlet_values=phi0)
    phi_active, _ = problem.solve(rtol=rtol)
    return problem.phi_grid(phi_active), problem.energy(phi_active)
