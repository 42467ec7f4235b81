"""Uniform Cartesian grids over disc or rectangle domains.

The domain boundary is handled by a cell mask: a cell belongs to the
discrete domain iff its midpoint lies inside, free (unknown) nodes are the
nodes all of whose incident cells are inside, and the remaining active
nodes carry Dirichlet data evaluated at their nearest-boundary projection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"GLPF"
FORMAT_VERSION = 1

# node classification codes
OUTSIDE = 0
FREE = 1
DIRICHLET = 2
HOLE = 3


@dataclass(frozen=True)
class DomainSpec:
    """Disc of radius ``radius`` or axis-aligned ``width`` x ``height`` rectangle,
    centred at ``center``, discretised with spacing ``h``; ``margin`` >= 0 dilates
    the domain into the outer set used by the perforated problems."""

    shape: str = "disc"
    radius: float = 1.0
    width: float = 2.0
    height: float = 2.0
    center: tuple[float, float] = (0.0, 0.0)
    h: float = 0.01
    margin: float = 0.0

    def __post_init__(self):
        if self.shape not in ("disc", "rect"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        if self.h <= 0:
            raise ValueError("grid spacing h must be positive")
        if self.shape == "disc" and self.radius <= 0:
            raise ValueError("disc radius must be positive")
        if self.shape == "rect" and (self.width <= 0 or self.height <= 0):
            raise ValueError("rectangle sides must be positive")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    @property
    def half_extent(self) -> tuple[float, float]:
        if self.shape == "disc":
            return (self.radius, self.radius)
        return (self.width / 2.0, self.height / 2.0)

    def diameter(self) -> float:
        hx, hy = self.half_extent
        if self.shape == "disc":
            return 2.0 * self.radius
        return 2.0 * float(np.hypot(hx, hy))

    def contains(self, x, y, dilation: float = 0.0):
        """Strict membership of points in the (optionally dilated) domain."""
        cx, cy = self.center
        if self.shape == "disc":
            return np.hypot(x - cx, y - cy) < self.radius + dilation
        return (np.abs(x - cx) < self.width / 2.0 + dilation) & (
            np.abs(y - cy) < self.height / 2.0 + dilation
        )

    def boundary_distance(self, x, y):
        """Signed distance to the domain boundary (positive inside)."""
        cx, cy = self.center
        if self.shape == "disc":
            return self.radius - np.hypot(x - cx, y - cy)
        dx = self.width / 2.0 - np.abs(x - cx)
        dy = self.height / 2.0 - np.abs(y - cy)
        return np.minimum(dx, dy)

    def project_boundary(self, x, y):
        """Nearest point of the domain boundary (used for Dirichlet rows)."""
        cx, cy = self.center
        if self.shape == "disc":
            rx, ry = x - cx, y - cy
            r = np.hypot(rx, ry)
            r = np.where(r == 0.0, 1.0, r)
            s = self.radius / r
            return cx + rx * s, cy + ry * s
        hx, hy = self.width / 2.0, self.height / 2.0
        dx, dy = np.clip(x - cx, -hx, hx), np.clip(y - cy, -hy, hy)
        # push the closer coordinate onto the boundary
        gapx = hx - np.abs(dx)
        gapy = hy - np.abs(dy)
        snap_x = gapx <= gapy
        sx = np.where(dx >= 0, hx, -hx)
        sy = np.where(dy >= 0, hy, -hy)
        px = np.where(snap_x, sx, dx)
        py = np.where(snap_x, dy, sy)
        return cx + px, cy + py


@dataclass(frozen=True)
class Grid:
    """Node lattice: node (i, j) sits at (x0 + i*h, y0 + j*h)."""

    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    @property
    def xs(self):
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self):
        return self.y0 + self.h * np.arange(self.ny)

    def nodes(self):
        """Node coordinates as two (nx, ny) arrays."""
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def cell_midpoints(self):
        xc = self.x0 + self.h * (np.arange(self.nx - 1) + 0.5)
        yc = self.y0 + self.h * (np.arange(self.ny - 1) + 0.5)
        return np.meshgrid(xc, yc, indexing="ij")

    def nearest_node(self, x: float, y: float) -> tuple[int, int]:
        i = int(round((x - self.x0) / self.h))
        j = int(round((y - self.y0) / self.h))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)


def grid_for_domain(dom: DomainSpec, pad_cells: int = 2) -> Grid:
    """Symmetric grid covering the closure of the dilated domain; the domain
    center is always a node."""
    hx, hy = dom.half_extent
    half_x = hx + dom.margin + pad_cells * dom.h
    half_y = hy + dom.margin + pad_cells * dom.h
    icx = int(np.ceil(half_x / dom.h))
    icy = int(np.ceil(half_y / dom.h))
    cx, cy = dom.center
    return Grid(x0=cx - icx * dom.h, y0=cy - icy * dom.h, h=dom.h, nx=2 * icx + 1, ny=2 * icy + 1)


class GridDomain:
    """Grid plus cell mask plus node classification for one discrete domain.

    holes: list of (center, radius) discs excised from the domain; nodes whose
    missing neighbour cells are all hole cells are classified HOLE (natural or
    constrained boundary, decided by the solver), nodes missing cells towards
    the outer boundary are DIRICHLET.
    """

    def __init__(self, dom: DomainSpec, grid: Grid | None = None,
                 holes: list[tuple[tuple[float, float], float]] | None = None,
                 dilation: float = 0.0, pad_cells: int = 2):
        self.dom = dom
        self.grid = grid if grid is not None else grid_for_domain(dom, pad_cells)
        self.holes = list(holes) if holes else []
        self.dilation = dilation
        g = self.grid
        xm, ym = g.cell_midpoints()
        inside = dom.contains(xm, ym, dilation)
        hole_cell = np.zeros_like(inside)
        for (hx, hy), rho in self.holes:
            hole_cell |= np.hypot(xm - hx, ym - hy) < rho
        self.cell_mask = inside & ~hole_cell

        nx, ny = g.nx, g.ny
        ncells = np.zeros((nx, ny), dtype=np.int8)
        missing_outer = np.zeros((nx, ny), dtype=bool)
        missing_hole = np.zeros((nx, ny), dtype=bool)
        cm = self.cell_mask
        out = inside  # cells inside the (dilated) domain ignoring holes
        for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
            sl = (slice(1 - di, nx - di), slice(1 - dj, ny - dj))
            ncells[sl] += cm.astype(np.int8)
            missing_outer[sl] |= ~out
            missing_hole[sl] |= out & hole_cell
        self.ncells = ncells
        self.active = ncells > 0
        code = np.full((nx, ny), OUTSIDE, dtype=np.int8)
        code[self.active] = FREE
        code[self.active & missing_outer] = DIRICHLET
        code[self.active & missing_hole & ~missing_outer] = HOLE
        self.node_code = code

        # edge Dirichlet weights: (number of adjacent inside cells) / 2
        wx = np.zeros((nx - 1, ny))
        wx[:, 1:] += cm
        wx[:, :-1] += cm
        wy = np.zeros((nx, ny - 1))
        wy[1:, :] += cm
        wy[:-1, :] += cm
        self.wx_count = wx / 2.0
        self.wy_count = wy / 2.0
        self.node_vol = (ncells / 4.0) * g.h * g.h

        if not self.cell_mask.any():
            raise ValueError("discrete domain is empty: grid does not resolve the domain")

    def hole_index(self, i, j):
        """Index of the hole owning node (i, j); nearest center wins."""
        x = self.grid.x0 + i * self.grid.h
        y = self.grid.y0 + j * self.grid.h
        best, bd = -1, np.inf
        for k, ((hx, hy), rho) in enumerate(self.holes):
            d = np.hypot(x - hx, y - hy) - rho
            if d < bd:
                bd, best = d, k
        return best

    def dirichlet_nodes(self):
        return np.argwhere(self.node_code == DIRICHLET)

    def boundary_loop(self):
        """Dirichlet nodes ordered by angle about the domain center.

        Valid for the convex domains supported here; used to trace boundary
        data and compute windings.
        """
        idx = self.dirichlet_nodes()
        x = self.grid.x0 + idx[:, 0] * self.grid.h
        y = self.grid.y0 + idx[:, 1] * self.grid.h
        cx, cy = self.dom.center
        ang = np.arctan2(y - cy, x - cx)
        order = np.lexsort((idx[:, 1], idx[:, 0], ang))
        return idx[order]


@dataclass
class ScalarField:
    """Real grid function with the Dirichlet trace stored exactly."""

    domain: GridDomain
    values: np.ndarray

    def copy(self):
        return ScalarField(self.domain, self.values.copy())


@dataclass
class ComplexField:
    """Complex grid function; boundary rows carry the prescribed trace."""

    domain: GridDomain
    values: np.ndarray

    def copy(self):
        return ComplexField(self.domain, self.values.copy())


def write_binary_grid(path, values: np.ndarray):
    """Compact binary grid: 16-byte header (magic, version, nx, ny as 32-bit
    little-endian) followed by float64 values in row-major order."""
    a = np.ascontiguousarray(values, dtype=np.float64)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, a.shape[0], a.shape[1]))
        f.write(a.tobytes(order="C"))


def read_binary_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) != 16 or head[:4] != MAGIC:
            raise ValueError(f"{path}: not a GLPF grid file")
        version, nx, ny = struct.unpack("<III", head[4:])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        data = np.frombuffer(f.read(8 * nx * ny), dtype="<f8")
        if data.size != nx * ny:
            raise ValueError(f"{path}: truncated payload")
        return data.reshape(nx, ny).copy()


def write_csv_field(path, grid: Grid, values: np.ndarray, mask: np.ndarray | None = None):
    """CSV export (x, y, value), row-major over the grid."""
    with open(path, "w") as f:
        f.write("x,y,value\n")
        xs, ys = grid.xs, grid.ys
        for i in range(grid.nx):
            for j in range(grid.ny):
                if mask is not None and not mask[i, j]:
                    continue
                f.write(f"{xs[i]:.17g},{ys[j]:.17g},{values[i, j]:.17g}\n")
