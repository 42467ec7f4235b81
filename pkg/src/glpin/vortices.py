"""Zero detection, winding numbers, energy-threshold disc classification,
ball separation, and pinning diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .energies import local_energy_F
from .grids import ComplexField, GridDomain, ScalarField
from .pinning import PinningField


class DegreeCircleError(RuntimeError):
    """Circle crosses a vortex core (modulus too small to read the phase)."""


@dataclass(frozen=True)
class Vortex:
    position: tuple[float, float]
    degree: int


@dataclass
class VortexSet:
    vortices: list
    threshold: float
    phantom_dips: list = field(default_factory=list)   # components with degree 0
    boundary_flagged: list = field(default_factory=list)

    def __len__(self):
        return len(self.vortices)

    def positions(self):
        return [v.position for v in self.vortices]

    def degrees(self):
        return [v.degree for v in self.vortices]

    def to_json(self):
        return {
            "threshold": self.threshold,
            "vortices": [{"position": list(v.position), "degree": v.degree}
                         for v in self.vortices],
            "phantom_dips": [list(p) for p in self.phantom_dips],
            "boundary_flagged": [list(p) for p in self.boundary_flagged],
        }


@dataclass(frozen=True)
class DiscFamily:
    centers: tuple
    radius: float

    def __len__(self):
        return len(self.centers)


@dataclass(frozen=True)
class SeparationResult:
    selected: tuple
    kappa: int
    steps: tuple = ()

    def to_json(self):
        return {"selected": [list(c) for c in self.selected], "kappa": self.kappa,
                "steps": [list(map(list, s)) for s in self.steps]}


def _bilinear(values: np.ndarray, grid, x, y):
    fx = (np.asarray(x) - grid.x0) / grid.h
    fy = (np.asarray(y) - grid.y0) / grid.h
    i = np.clip(np.floor(fx).astype(int), 0, grid.nx - 2)
    j = np.clip(np.floor(fy).astype(int), 0, grid.ny - 2)
    s = fx - i
    t = fy - j
    return ((1 - s) * (1 - t) * values[i, j] + s * (1 - t) * values[i + 1, j]
            + (1 - s) * t * values[i, j + 1] + s * t * values[i + 1, j + 1])


def degree_on_circle(v: ComplexField, center, radius: float,
                     min_modulus: float = 0.1, m_init: int = 64) -> int:
    """Winding of v around the circle from principal phase differences of
    equispaced samples; the sample count is grown until adjacent phase jumps
    stay below pi/2."""
    g = v.domain.grid
    cx, cy = center
    if not bool(v.domain.dom.contains(cx + radius, cy)) \
            or not bool(v.domain.dom.contains(cx - radius, cy)) \
            or not bool(v.domain.dom.contains(cx, cy + radius)) \
            or not bool(v.domain.dom.contains(cx, cy - radius)):
        raise ValueError("degree circle leaves the domain")
    m = max(m_init, int(8 * radius / g.h))
    for _ in range(6):
        th = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
        vals = _bilinear(v.values, g, cx + radius * np.cos(th), cy + radius * np.sin(th))
        mod = np.abs(vals)
        if mod.min() < min_modulus:
            raise DegreeCircleError(
                f"circle crosses a vortex core: min |v| = {mod.min():.3f} on the circle")
        rolled = np.roll(vals, -1)
        jumps = np.angle(rolled / vals)
        if np.max(np.abs(jumps)) < math.pi / 2:
            return int(round(float(np.sum(jumps)) / (2 * math.pi)))
        m *= 2
    raise DegreeCircleError("phase jumps stay too large; field is under-resolved")


def _refine_zero(v: ComplexField, i0: int, j0: int):
    """Sub-grid zero of the bilinear interpolant near the minimum-modulus node."""
    g = v.domain.grid
    vals = v.values
    best = None
    for ci in (i0 - 1, i0):
        for cj in (j0 - 1, j0):
            if not (0 <= ci < g.nx - 1 and 0 <= cj < g.ny - 1):
                continue
            z00, z10 = vals[ci, cj], vals[ci + 1, cj]
            z01, z11 = vals[ci, cj + 1], vals[ci + 1, cj + 1]
            # bilinear z(s,t) = a + b s + c t + d s t, zero of Re and Im
            a, b = z00, z10 - z00
            c, d = z01 - z00, z11 - z10 - z01 + z00
            # Re: a_r + b_r s + c_r t + d_r s t = 0, same for Im: solve for t(s)
            # quadratic in s after elimination
            A2 = b.real * d.imag - d.real * b.imag
            B2 = (a.real * d.imag - d.real * a.imag) + (b.real * c.imag - c.real * b.imag)
            C2 = a.real * c.imag - c.real * a.imag
            roots = []
            if abs(A2) < 1e-30:
                if abs(B2) > 1e-30:
                    roots = [-C2 / B2]
            else:
                disc = B2 * B2 - 4 * A2 * C2
                if disc >= 0:
                    sq = math.sqrt(disc)
                    roots = [(-B2 + sq) / (2 * A2), (-B2 - sq) / (2 * A2)]
            for s in roots:
                if not -0.05 <= s <= 1.05:
                    continue
                den_r = c.real + d.real * s
                den_i = c.imag + d.imag * s
                if abs(den_r) >= abs(den_i):
                    if abs(den_r) < 1e-30:
                        continue
                    t = -(a.real + b.real * s) / den_r
                else:
                    t = -(a.imag + b.imag * s) / den_i
                if -0.05 <= t <= 1.05:
                    x = g.x0 + (ci + s) * g.h
                    y = g.y0 + (cj + t) * g.h
                    res = abs(a + b * s + c * t + d * s * t)
                    if best is None or res < best[0]:
                        best = (res, x, y)
    if best is not None:
        return best[1], best[2]
    return None


def detect_zeros(v: ComplexField, threshold: float = 0.5,
                 eps: float | None = None) -> VortexSet:
    """Connected components of {|v| < threshold}: positions by weighted
    centroid refined to the bilinear sub-grid zero, degrees from the smallest
    safe circle; zero-winding dips are reported separately."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    domain = v.domain
    g = domain.grid
    mod = np.abs(v.values)
    low = (mod < threshold) & domain.active
    labels, nlab = ndimage.label(low)
    vortices, phantom, flagged = [], [], []
    boundary_mask = domain.node_code == 2  # DIRICHLET
    X, Y = g.nodes()
    for k in range(1, nlab + 1):
        comp = labels == k
        touches_boundary = bool((comp & boundary_mask).any())
        idx = np.argwhere(comp)
        w = (threshold - mod[comp])
        wsum = float(w.sum())
        cx = float((X[comp] * w).sum() / wsum) if wsum > 0 else float(X[comp].mean())
        cy = float((Y[comp] * w).sum() / wsum) if wsum > 0 else float(Y[comp].mean())
        if touches_boundary:
            flagged.append((cx, cy))
            continue
        imin, jmin = idx[np.argmin(mod[comp])] if len(idx) else (None, None)
        ref = _refine_zero(v, int(imin), int(jmin))
        if ref is not None:
            cx, cy = ref
        # smallest safe circle: outside the core but inside the domain
        extent = 0.0
        if len(idx) > 1:
            extent = float(np.max(np.hypot(X[comp] - cx, Y[comp] - cy)))
        r = max(4 * g.h, 3 * (eps or 0.0), extent + 2 * g.h)
        deg = None
        for _ in range(8):
            try:
                deg = degree_on_circle(v, (cx, cy), r)
                break
            except (DegreeCircleError, ValueError):
                r *= 1.4
        if deg is None or deg == 0:
            phantom.append((cx, cy))
        else:
            vortices.append(Vortex(position=(cx, cy), degree=deg))
    vortices.sort(key=lambda z: (z.position[0], z.position[1]))
    return VortexSet(vortices=vortices, threshold=threshold,
                     phantom_dips=phantom, boundary_flagged=flagged)


def covering_centers(domain: GridDomain, radius: float):
    """Square lattice of spacing radius/2 covering the domain: quarter-radius
    discs are disjoint and the radius-discs cover it."""
    s = radius / 2.0
    cx, cy = domain.dom.center
    hx, hy = domain.dom.half_extent
    out = []
    ni = int(math.ceil((hx + s) / s))
    nj = int(math.ceil((hy + s) / s))
    for i in range(-ni, ni + 1):
        for j in range(-nj, nj + 1):
            x, y = cx + i * s, cy + j * s
            if float(domain.dom.boundary_distance(x, y)) >= -s:
                out.append((x, y))
    return out


def classify_discs(v: ComplexField, U: ScalarField, eps: float,
                   alpha: float = 0.25, threshold: float = 0.3,
                   centers=None):
    """Partition a trivial disc covering by the local-energy test
    F(v, B) > threshold * |ln eps|; returns (good, bad) families."""
    r = eps ** alpha
    if centers is None:
        centers = covering_centers(v.domain, r)
    cut = threshold * abs(math.log(eps))
    good, bad = [], []
    for c in centers:
        e_loc = local_energy_F(v, U, eps, c, r)
        (bad if e_loc > cut else good).append(c)
    return DiscFamily(tuple(good), r), DiscFamily(tuple(bad), r)


def separate(centers, eta: float) -> SeparationResult:
    """Iterative ball-merging: returns a subset {y} and kappa = 9^m with
    pairwise |y_i - y_j| >= 8 kappa eta and union B(x, eta) inside
    union B(y, kappa eta).  Representatives are chosen greedily in
    lexicographic order, which makes the output deterministic."""
    pts = [tuple(map(float, c)) for c in centers]
    n = len(pts)
    if n == 0:
        raise ValueError("need at least one center")
    current = sorted(pts)
    kappa = 1
    steps = [tuple(current)]
    for _ in range(n - 1):
        if len(current) == 1:
            break
        sep = 8 * kappa * eta
        if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= sep
               for i, p in enumerate(current) for q in current[i + 1:]):
            break
        # greedy selection: keep a point, drop everything within 8*kappa*eta
        kept = []
        for p in current:
            if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= sep for q in kept):
                kept.append(p)
        current = kept
        kappa *= 9
        steps.append(tuple(current))
    return SeparationResult(selected=tuple(current), kappa=kappa, steps=tuple(steps))


def check_separation(centers, eta: float, result: SeparationResult,
                     samples: int = 48) -> bool:
    """Brute-force verification of the separation postconditions."""
    sep = 8 * result.kappa * eta
    sel = result.selected
    for i, p in enumerate(sel):
        for q in sel[i + 1:]:
            if math.hypot(p[0] - q[0], p[1] - q[1]) < sep * (1 - 1e-12):
                return False
    th = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    for (x, y) in centers:
        for rr in (eta, eta / 2, 0.0):
            px = x + rr * np.cos(th)
            py = y + rr * np.sin(th)
            covered = np.zeros(samples, dtype=bool)
            for (sx, sy) in sel:
                covered |= np.hypot(px - sx, py - sy) <= result.kappa * eta * (1 + 1e-12)
            if not covered.all():
                return False
    return True


def pinning_report(zeros: VortexSet, field: PinningField, scale: float) -> dict:
    """Per-zero inclusion membership and normalised boundary distances, plus
    the global separation diagnostics."""
    per_zero = []
    for z in zeros.vortices:
        x, y = z.position
        host = field.hosting_inclusion(x, y)
        dist_bd = float(field.boundary_distance(x, y))
        per_zero.append({
            "position": [x, y],
            "degree": z.degree,
            "inside_inclusion": host is not None,
            "normalized_boundary_distance": dist_bd / scale if scale > 0 else None,
            "hosting_stage": host.stage if host is not None else None,
        })
    pos = zeros.positions()
    min_pair = None
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            d = math.hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1])
            min_pair = d if min_pair is None else min(min_pair, d)
    min_bd = None
    for (x, y) in pos:
        d = float(field.dom.boundary_distance(x, y))
        min_bd = d if min_bd is None else min(min_bd, d)
    return {"zeros": per_zero, "min_pairwise_distance": min_pair,
            "min_boundary_distance": min_bd}
