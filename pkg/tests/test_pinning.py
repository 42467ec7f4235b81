"""Geometry of the impurity coefficient: builders, scaling ratio, exact
circle intersections."""

import math

import numpy as np
import pytest

from glpin.grids import DomainSpec, GridDomain
from glpin.pinning import (DilutedPinningSpec, Inclusion, PeriodicPinningSpec,
                           PinningField, SeparationError, UnitInclusion,
                           build_diluted, build_periodic, circle_inclusion_length,
                           validate_scaling, validate_separation)

DOM = DomainSpec(shape="disc", radius=1.0, h=0.02)


@pytest.fixture(scope="module")
def periodic_field():
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
    return build_periodic(spec, DOM)


def test_build_periodic_cell_center_and_corner(periodic_field):
    # center of an interior cell is inside the scaled inclusion
    assert periodic_field.coefficient(0.0, 0.0) == 0.5
    # cell corner is outside every inclusion
    assert periodic_field.coefficient(0.125, 0.125) == 1.0


def test_inclusion_physical_radius():
    spec = PeriodicPinningSpec(b=0.5, lam=1.0, delta=0.25)
    f = build_periodic(spec, DOM)
    # lam = 1: inclusion radius in physical units is r0 * delta
    r_phys = 0.25 * 0.25
    assert f.coefficient(r_phys - 1e-6, 0.0) == 0.5
    assert f.coefficient(r_phys + 1e-6, 0.0) == 1.0


def test_values_in_range(periodic_field):
    assert set(np.unique(periodic_field.values)) == {0.5, 1.0}


def test_no_interior_cell_error():
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.9)
    small = DomainSpec(shape="disc", radius=0.4, h=0.02)
    with pytest.raises(ValueError, match="no interior cell"):
        build_periodic(spec, small)


def test_cells_straddling_boundary_carry_no_inclusion(periodic_field):
    # every inclusion's cell corners must be inside the disc
    d = 0.25
    for inc in periodic_field.inclusions:
        cx, cy = inc.center
        corners = [(cx - d / 2, cy - d / 2), (cx + d / 2, cy - d / 2),
                   (cx - d / 2, cy + d / 2), (cx + d / 2, cy + d / 2)]
        for (x, y) in corners:
            assert math.hypot(x, y) <= 1.0 + 1e-12


def test_periodicity_property(periodic_field):
    rng = np.random.default_rng(0)
    d = 0.25
    pts = rng.uniform(-0.12, 0.12, size=(64, 2))
    for (k, l) in ((1, 0), (0, 1), (1, 1), (-1, 1)):
        shifted = pts + np.array([k * d, l * d])
        a0 = periodic_field.coefficient(pts[:, 0], pts[:, 1])
        a1 = periodic_field.coefficient(shifted[:, 0], shifted[:, 1])
        assert np.array_equal(a0, a1)


def test_diluted_matches_periodic_on_lattice(periodic_field):
    # same centers, single scale: fields coincide pointwise (the lattice
    # violates the diluted separation hypothesis, so validation is bypassed)
    centers = tuple(inc.center for inc in periodic_field.inclusions)
    spec = DilutedPinningSpec(b=0.5, lam=0.5, delta=0.25, centers=(centers,))
    field = build_diluted(spec, DOM, check=False)
    assert np.array_equal(field.values, periodic_field.values)


def test_diluted_two_scales_center_value():
    spec = DilutedPinningSpec(b=0.5, lam=0.5, delta=0.1,
                              centers=(((0.0, 0.0),), ((0.5, 0.0),)))
    dom = DomainSpec(shape="disc", radius=1.0, h=0.01)
    f = build_diluted(spec, dom)
    assert f.coefficient(0.5, 0.0) == 0.5   # center of the scale-2 inclusion
    assert f.coefficient(0.0, 0.0) == 0.5
    scales = sorted({inc.scale for inc in f.inclusions})
    assert np.allclose(scales, [0.5 * 0.01, 0.5 * 0.1])


def test_diluted_separation_violation():
    delta = 0.1
    gap = 0.5 * (delta + delta ** 2)
    spec = DilutedPinningSpec(b=0.5, lam=0.5, delta=delta,
                              centers=(((0.0, 0.0),), ((gap, 0.0),)))
    with pytest.raises(SeparationError) as err:
        build_diluted(spec, DOM)
    assert err.value.pairs


def test_diluted_boundary_clearance():
    spec = DilutedPinningSpec(b=0.5, lam=0.5, delta=0.2,
                              centers=(((0.95, 0.0),),))
    with pytest.raises(SeparationError, match="boundary"):
        validate_separation(spec, DOM)


def test_sizehyp_count():
    spec = DilutedPinningSpec(b=0.5, lam=0.5, delta=0.2,
                              centers=(((0.0, 0.0),),), degree=2, eta=0.4)
    with pytest.raises(SeparationError, match="stage-1"):
        validate_separation(spec, DOM)


def test_validate_scaling_values():
    # frozen oracles, evaluated independently with mpmath
    assert validate_scaling(1e-6, 1.0, 0.1) == pytest.approx(0.8836496850797330, abs=1e-12)
    assert validate_scaling(1e-4, 1.0, 0.5) == pytest.approx(0.0361576921741357, abs=1e-12)


def test_validate_scaling_diverges_when_scales_match():
    eps = 1e-3
    ratio = validate_scaling(eps, 1.0, eps)
    assert ratio == pytest.approx(abs(math.log(eps)) ** 2, rel=1e-12)


def test_validate_scaling_domain_errors():
    with pytest.raises(ValueError):
        validate_scaling(1.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        validate_scaling(0.01, 1.0, 1.0)


def test_circle_length_trivial_cases(periodic_field):
    assert circle_inclusion_length(periodic_field, (0.125, 0.125), 0.02) == 0.0
    L = circle_inclusion_length(periodic_field, (0.0, 0.0), 0.01)
    assert L == pytest.approx(2 * math.pi * 0.01, rel=1e-14)


def test_circle_length_against_sampling(periodic_field):
    rng = np.random.default_rng(7)
    th = np.linspace(0, 2 * math.pi, 400_001)
    for _ in range(5):
        c = rng.uniform(-0.4, 0.4, size=2)
        rho = rng.uniform(0.05, 0.3)
        exact = circle_inclusion_length(periodic_field, c, rho)
        x = c[0] + rho * np.cos(th)
        y = c[1] + rho * np.sin(th)
        approx = periodic_field.membership(x, y)[:-1].mean() * 2 * math.pi * rho
        assert exact == pytest.approx(approx, abs=3e-3 * max(rho, 0.1))


def test_circle_length_polygon():
    square = UnitInclusion(kind="polygon",
                           vertices=((-0.3, -0.3), (0.3, -0.3), (0.3, 0.3), (-0.3, 0.3)))
    dom = DomainSpec(shape="disc", radius=1.0, h=0.02)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.4, inclusion=square)
    f = build_periodic(spec, dom)
    rng = np.random.default_rng(3)
    th = np.linspace(0, 2 * math.pi, 400_001)
    for _ in range(4):
        c = rng.uniform(-0.3, 0.3, size=2)
        rho = rng.uniform(0.05, 0.25)
        exact = circle_inclusion_length(f, c, rho)
        approx = f.membership(c[0] + rho * np.cos(th),
                              c[1] + rho * np.sin(th))[:-1].mean() * 2 * math.pi * rho
        assert exact == pytest.approx(approx, abs=3e-3)


def test_intersection_bound_property(periodic_field):
    # dilution bound on circles of radius >= delta/3 at lam <= 1/(8 pi)
    lam = 1.0 / (16 * math.pi)
    spec = PeriodicPinningSpec(b=0.5, lam=lam, delta=0.25)
    f = build_periodic(spec, DOM)
    rng = np.random.default_rng(11)
    for _ in range(200):
        c = rng.uniform(-0.5, 0.5, size=2)
        rho = rng.uniform(0.25 / 3, 0.45)
        L = circle_inclusion_length(f, c, rho)
        assert L <= 16 * math.pi ** 2 * lam * rho + 1e-12


def test_distance_queries(periodic_field):
    # distance to the impurity boundary from an inclusion center
    d = float(periodic_field.boundary_distance(0.0, 0.0))
    assert d == pytest.approx(0.5 * 0.25 * 0.25, rel=1e-12)
    host = periodic_field.hosting_inclusion(0.0, 0.0)
    assert host is not None and host.stage == 1
    assert periodic_field.hosting_inclusion(0.125, 0.125) is None
