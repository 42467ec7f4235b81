"""Construction and exact geometric queries for the impurity coefficient.

The coefficient takes the value b on a union of small scaled copies of a
unit inclusion shape and 1 elsewhere.  All membership, distance and
circle-intersection queries go through the exact inclusion list, never the
grid sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import DomainSpec, GridDomain, ScalarField


class SeparationError(ValueError):
    """Raised when inclusion centers violate the separation hypotheses."""

    def __init__(self, message, pairs=None):
        super().__init__(message)
        self.pairs = pairs or []


@dataclass(frozen=True)
class UnitInclusion:
    """Reference inclusion inside the open unit cell (-1/2, 1/2)^2.

    Either a disc of radius r0 < 1/2 centred at the origin or a convex
    polygon containing the origin.
    """

    kind: str = "disc"
    r0: float = 0.25
    vertices: tuple = ()

    def __post_init__(self):
        if self.kind == "disc":
            if not 0 < self.r0 < 0.5:
                raise ValueError("disc inclusion needs 0 < r0 < 1/2")
        elif self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValueError("polygon needs at least 3 (x, y) vertices")
            if np.abs(v).max() >= 0.5:
                raise ValueError("polygon vertices must stay inside the unit cell")
            if not _polygon_is_convex(v):
                raise ValueError("polygon inclusion must be convex")
            if not self.contains_unit(0.0, 0.0):
                raise ValueError("inclusion must contain the origin")
        else:
            raise ValueError(f"unknown inclusion kind {self.kind!r}")

    def contains_unit(self, x, y):
        """Membership in the reference (unscaled) inclusion."""
        if self.kind == "disc":
            return np.hypot(x, y) < self.r0
        v = np.asarray(self.vertices, dtype=float)
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        n = v.shape[0]
        for k in range(n):
            ax, ay = v[k]
            bx, by = v[(k + 1) % n]
            cross = (bx - ax) * (np.asarray(y) - ay) - (by - ay) * (np.asarray(x) - ax)
            inside &= cross > 0 if _polygon_orientation(v) > 0 else cross < 0
        return inside

    def boundary_distance_unit(self, x, y):
        """Unsigned distance to the reference inclusion boundary."""
        if self.kind == "disc":
            return np.abs(np.hypot(x, y) - self.r0)
        v = np.asarray(self.vertices, dtype=float)
        n = v.shape[0]
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for k in range(n):
            ax, ay = v[k]
            bx, by = v[(k + 1) % n]
            d = np.minimum(d, _segment_distance(np.asarray(x, float), np.asarray(y, float),
                                                ax, ay, bx, by))
        return d

    def outer_radius(self) -> float:
        if self.kind == "disc":
            return self.r0
        v = np.asarray(self.vertices, dtype=float)
        return float(np.hypot(v[:, 0], v[:, 1]).max())


def _polygon_orientation(v):
    area2 = 0.0
    n = v.shape[0]
    for k in range(n):
        ax, ay = v[k]
        bx, by = v[(k + 1) % n]
        area2 += ax * by - bx * ay
    return 1.0 if area2 > 0 else -1.0


def _polygon_is_convex(v):
    n = v.shape[0]
    sign = 0
    for k in range(n):
        a, b, c = v[k], v[(k + 1) % n], v[(k + 2) % n]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cr) < 1e-14:
            continue
        s = 1 if cr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _segment_distance(x, y, ax, ay, bx, by):
    ux, uy = bx - ax, by - ay
    L2 = ux * ux + uy * uy
    t = np.clip(((x - ax) * ux + (y - ay) * uy) / L2, 0.0, 1.0)
    return np.hypot(x - (ax + t * ux), y - (ay + t * uy))


@dataclass(frozen=True)
class PeriodicPinningSpec:
    """Periodic impurity lattice: cells of side delta, inclusion scaled by
    lam inside each cell fully contained in the domain."""

    b: float
    lam: float
    delta: float
    inclusion: UnitInclusion = field(default_factory=UnitInclusion)

    def __post_init__(self):
        if not 0 < self.b < 1:
            raise ValueError("b must lie in (0, 1)")
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class DilutedPinningSpec:
    """Impurities of several sizes: at stage j in 1..stages the inclusion at
    center y_{i,j} is scaled by lam * delta**j.

    centers[j-1] lists the stage-j centers.  Validation enforces the pairwise
    separation |y - y'| >= delta^j + delta^j' and the boundary clearance
    delta^j, plus at least ``degree`` stage-1 centers mutually eta-separated
    and eta-far from the boundary.
    """

    b: float
    lam: float
    delta: float
    centers: tuple    # tuple over stages of tuples of (x, y)
    degree: int = 1
    eta: float = 0.0
    inclusion: UnitInclusion = field(default_factory=UnitInclusion)

    def __post_init__(self):
        if not 0 < self.b < 1:
            raise ValueError("b must lie in (0, 1)")
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if len(self.centers) < 1:
            raise ValueError("at least one stage of centers required")

    @property
    def stages(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class Inclusion:
    """One physical impurity: x -> center + scale * (unit inclusion)."""

    center: tuple[float, float]
    scale: float
    stage: int
    shape: UnitInclusion

    def contains(self, x, y):
        return self.shape.contains_unit((np.asarray(x, float) - self.center[0]) / self.scale,
                                        (np.asarray(y, float) - self.center[1]) / self.scale)

    def boundary_distance(self, x, y):
        return self.scale * self.shape.boundary_distance_unit(
            (np.asarray(x, float) - self.center[0]) / self.scale,
            (np.asarray(y, float) - self.center[1]) / self.scale)

    def outer_radius(self) -> float:
        return self.scale * self.shape.outer_radius()


class PinningField:
    """Grid sampling of the impurity coefficient plus the exact geometry."""

    def __init__(self, spec, dom: DomainSpec, inclusions: list[Inclusion],
                 domain: GridDomain | None = None):
        self.spec = spec
        self.dom = dom
        self.inclusions = inclusions
        self.domain = domain if domain is not None else GridDomain(dom)
        X, Y = self.domain.grid.nodes()
        self.values = np.where(self.membership(X, Y), spec.b, 1.0)

    @property
    def b(self) -> float:
        return self.spec.b

    def membership(self, x, y):
        """Exact membership of points in the impurity set."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for inc in self.inclusions:
            cx, cy = inc.center
            near = np.hypot(x - cx, y - cy) <= inc.outer_radius() + 1e-15
            if np.any(near):
                inside |= near & inc.contains(x, y)
        return inside

    def coefficient(self, x, y):
        return np.where(self.membership(x, y), self.spec.b, 1.0)

    def boundary_distance(self, x, y):
        """Exact distance to the union of inclusion boundaries."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = np.full(np.broadcast(x, y).shape, np.inf)
        for inc in self.inclusions:
            d = np.minimum(d, inc.boundary_distance(x, y))
        return d

    def hosting_inclusion(self, x: float, y: float):
        """The inclusion containing the point, or None."""
        for inc in self.inclusions:
            if bool(inc.contains(x, y)):
                return inc
        return None

    def as_scalar_field(self) -> ScalarField:
        return ScalarField(self.domain, self.values.copy())


def build_periodic(spec: PeriodicPinningSpec, dom: DomainSpec) -> PinningField:
    """Impurity field on the delta-lattice; cells not fully contained in the
    domain carry no inclusion."""
    if spec.delta >= dom.diameter():
        raise ValueError("no interior cell: delta exceeds the domain diameter")
    d = spec.delta
    hx, hy = dom.half_extent
    cx, cy = dom.center
    kmax = int(math.ceil((hx + d) / d)) + 1
    lmax = int(math.ceil((hy + d) / d)) + 1
    inclusions = []
    for k in range(-kmax, kmax + 1):
        for l in range(-lmax, lmax + 1):
            # cell Y^delta_{k,l} = delta*Y + delta*(k,l); corners must lie in the domain
            x0, y0 = d * k, d * l
            corners_x = np.array([x0 - d / 2, x0 + d / 2, x0 + d / 2, x0 - d / 2])
            corners_y = np.array([y0 - d / 2, y0 - d / 2, y0 + d / 2, y0 + d / 2])
            if dom.shape == "disc":
                ok = np.all(np.hypot(corners_x - cx, corners_y - cy) <= dom.radius)
            else:
                ok = np.all((np.abs(corners_x - cx) <= hx) & (np.abs(corners_y - cy) <= hy))
            if ok:
                inclusions.append(Inclusion(center=(x0, y0), scale=spec.lam * d,
                                            stage=1, shape=spec.inclusion))
    if not inclusions:
        raise ValueError("no interior cell: delta too large for this domain")
    return PinningField(spec, dom, inclusions)


def validate_separation(spec: DilutedPinningSpec, dom: DomainSpec) -> None:
    """Check the center separation and boundary-clearance hypotheses;
    raises SeparationError listing every offending pair."""
    flat = []
    for j, stage in enumerate(spec.centers, start=1):
        for c in stage:
            flat.append((j, float(c[0]), float(c[1])))
    bad_pairs = []
    for a in range(len(flat)):
        ja, xa, ya = flat[a]
        for b_ in range(a + 1, len(flat)):
            jb, xb, yb = flat[b_]
            need = spec.delta ** ja + spec.delta ** jb
            if math.hypot(xa - xb, ya - yb) < need:
                bad_pairs.append(((ja, (xa, ya)), (jb, (xb, yb))))
    bad_boundary = []
    for j, x, y in flat:
        if float(dom.boundary_distance(x, y)) < spec.delta ** j:
            bad_boundary.append((j, (x, y)))
    msgs = []
    if bad_pairs:
        msgs.append(f"{len(bad_pairs)} center pair(s) closer than delta^j + delta^j'")
    if bad_boundary:
        msgs.append(f"{len(bad_boundary)} center(s) closer than delta^j to the boundary")
    if spec.eta > 0:
        stage1 = [(x, y) for j, x, y in flat if j == 1]
        good = [c for c in stage1
                if float(dom.boundary_distance(c[0], c[1])) >= spec.eta]
        # count a maximal eta-separated subset greedily
        kept = []
        for c in good:
            if all(math.hypot(c[0] - k[0], c[1] - k[1]) >= spec.eta for k in kept):
                kept.append(c)
        if len(kept) < spec.degree:
            msgs.append(
                f"only {len(kept)} stage-1 centers are eta-separated and eta-far "
                f"from the boundary; need {spec.degree}")
    if msgs:
        raise SeparationError("; ".join(msgs), pairs=bad_pairs)


def build_diluted(spec: DilutedPinningSpec, dom: DomainSpec,
                  check: bool = True) -> PinningField:
    """Impurity field with per-stage sizes lam * delta**j at given centers.

    check=False skips the separation hypotheses; needed e.g. to reproduce a
    full periodic lattice, whose spacing delta is below the 2*delta the
    hypotheses demand of same-stage centers.
    """
    if check:
        validate_separation(spec, dom)
    inclusions = []
    for j, stage in enumerate(spec.centers, start=1):
        for c in stage:
            inclusions.append(Inclusion(center=(float(c[0]), float(c[1])),
                                        scale=spec.lam * spec.delta ** j,
                                        stage=j, shape=spec.inclusion))
    return PinningField(spec, dom, inclusions)


def validate_scaling(eps: float, lam: float, delta: float) -> float:
    """Dilution/coherence scale ratio |ln(lam*delta)|^3 / |ln eps|."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    ld = lam * delta
    if not 0 < ld < 1:
        raise ValueError("lam*delta must lie in (0, 1)")
    return abs(math.log(ld)) ** 3 / abs(math.log(eps))


def _disc_arc_length(center, rho, inc_center, inc_radius):
    """Length of the circle |x-center| = rho inside the disc inclusion."""
    d = math.hypot(center[0] - inc_center[0], center[1] - inc_center[1])
    if d >= rho + inc_radius:
        return 0.0
    if d + rho <= inc_radius:
        return 2.0 * math.pi * rho
    if d + inc_radius <= rho:
        return 0.0
    cosv = (d * d + rho * rho - inc_radius * inc_radius) / (2.0 * d * rho)
    cosv = min(1.0, max(-1.0, cosv))
    return 2.0 * rho * math.acos(cosv)


def _polygon_arc_length(center, rho, inc: Inclusion):
    """Circle/convex-polygon intersection length via exact half-plane angles."""
    v = np.asarray(inc.shape.vertices, dtype=float) * inc.scale
    v = v + np.asarray(inc.center)
    orient = _polygon_orientation(np.asarray(inc.shape.vertices, dtype=float))
    cx, cy = center
    cuts = [0.0]
    n = v.shape[0]
    for k in range(n):
        ax, ay = v[k]
        bx, by = v[(k + 1) % n]
        # circle point c + rho e^{i t} on the edge line: solve for t
        ux, uy = bx - ax, by - ay
        nrm = math.hypot(ux, uy)
        nxv, nyv = -uy / nrm, ux / nrm  # normal
        dist = (cx - ax) * nxv + (cy - ay) * nyv
        if abs(dist) < rho:
            base = math.atan2(nyv, nxv)
            dt = math.acos(max(-1.0, min(1.0, -dist / rho)))
            cuts.extend([(base + dt) % (2 * math.pi), (base - dt) % (2 * math.pi)])
    cuts = sorted(set(cuts)) + [2 * math.pi]
    total = 0.0
    for a, b_ in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b_)
        px, py = cx + rho * math.cos(mid), cy + rho * math.sin(mid)
        if bool(inc.contains(px, py)):
            total += rho * (b_ - a)
    return total


def circle_inclusion_length(field: PinningField, center, rho: float,
                            stage: int | None = None) -> float:
    """Exact one-dimensional measure of the circle of radius rho inside the
    impurity set (optionally restricted to one stage of inclusion sizes)."""
    cx, cy = float(center[0]), float(center[1])
    g = field.domain.grid
    if not (g.x0 <= cx - rho and cx + rho <= g.x0 + (g.nx - 1) * g.h
            and g.y0 <= cy - rho and cy + rho <= g.y0 + (g.ny - 1) * g.h):
        raise ValueError("circle leaves the field bounding box")
    total = 0.0
    for inc in field.inclusions:
        if stage is not None and inc.stage != stage:
            continue
        gap = math.hypot(cx - inc.center[0], cy - inc.center[1])
        if gap > rho + inc.outer_radius():
            continue
        if inc.shape.kind == "disc":
            total += _disc_arc_length((cx, cy), rho, inc.center,
                                      inc.scale * inc.shape.r0)
        else:
            total += _polygon_arc_length((cx, cy), rho, inc)
    return total
