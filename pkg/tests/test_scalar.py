"""Scalar special solution: 1D interface profile and the 2D Newton solver."""

import math

import numpy as np
import pytest

from glpin.grids import DomainSpec, GridDomain
from glpin.pinning import Inclusion, PeriodicPinningSpec, PinningField, UnitInclusion, build_periodic
from glpin.scalar import NonConvergenceError, SolverParams, closeness_report, solve_U
from glpin.scalar1d import interface_constants, profile_1d_closed_form, solve_1d_interface


def test_interface_constants_frozen():
    # independent high-precision evaluation of the closed-form constants
    B, A = interface_constants(0.5)
    assert B == pytest.approx(-4.441518440112253, abs=1e-12)
    assert A == pytest.approx(8.549703546891172, abs=1e-12)


def test_profile_midpoint_value():
    assert profile_1d_closed_form(0.5, 0.0) == pytest.approx(
        math.sqrt(0.625), abs=1e-14)


def test_profile_limits_and_monotone():
    x = np.linspace(-40, 40, 2001)
    u = profile_1d_closed_form(0.5, x)
    assert u[0] == pytest.approx(0.5, abs=1e-10)
    assert u[-1] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(u) >= -1e-15)   # saturated tails may jitter by 1 ulp
    core = np.abs(x[:-1]) <= 10
    assert np.all(np.diff(u)[core] > 0)


def test_profile_domain_error():
    with pytest.raises(ValueError):
        profile_1d_closed_form(1.5, 0.0)
    with pytest.raises(ValueError):
        interface_constants(0.0)


def test_1d_solver_matches_closed_form():
    x, U = solve_1d_interface(0.5, 20.0, 4096)
    err = np.max(np.abs(U - profile_1d_closed_form(0.5, x)))
    assert err <= 1e-4
    assert np.min(np.diff(U)) >= -1e-12


def test_1d_solver_degenerate_b():
    x, U = solve_1d_interface(0.999, 12.0, 1200)
    assert np.max(np.abs(U - 1.0)) <= 2e-3


def test_1d_solver_preconditions():
    with pytest.raises(ValueError):
        solve_1d_interface(0.5, 5.0, 4096)
    with pytest.raises(ValueError):
        solve_1d_interface(0.5, 20.0, 100)


@pytest.fixture(scope="module")
def single_inclusion():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.01)
    gd = GridDomain(dom)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.9)
    inc = Inclusion(center=(0.0, 0.0), scale=1.2, stage=1,
                    shape=UnitInclusion(kind="disc", r0=0.25))  # radius 0.3
    return PinningField(spec, dom, [inc], domain=gd)


def test_constant_coefficient_gives_constant_solution():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.02)
    gd = GridDomain(dom)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
    ones = PinningField(spec, dom, [], domain=gd)
    U = solve_U(ones, 0.05)
    assert np.max(np.abs(U.values - 1.0)) == 0.0


def test_inclusion_interior_value(single_inclusion):
    U = solve_U(single_inclusion, 0.02)
    gd = single_inclusion.domain
    ctr = gd.grid.nearest_node(0.0, 0.0)
    # interior point at distance 0.3 >= 10 eps from the inclusion boundary
    assert abs(U.values[ctr] - 0.5) <= 0.01


def test_interface_value_flat(single_inclusion):
    # median over the interface circle approaches the 1D junction value
    from glpin.vortices import _bilinear

    U = solve_U(single_inclusion, 0.02)
    gd = single_inclusion.domain
    th = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    vals = _bilinear(U.values, gd.grid, 0.3 * np.cos(th), 0.3 * np.sin(th))
    assert abs(np.median(vals) - math.sqrt(0.625)) <= 0.05


def test_closeness_monotone(single_inclusion):
    eps = 0.02
    U = solve_U(single_inclusion, eps)
    rep = closeness_report(U, single_inclusion, eps, [2 * eps, 4 * eps, 8 * eps])
    vals = [v for _, v in rep]
    assert all(v is not None for v in vals)
    assert vals[0] >= vals[1] >= vals[2]


def test_closeness_exponential_slope(single_inclusion):
    eps = 0.02
    U = solve_U(single_inclusion, eps)
    radii = [2 * eps, 4 * eps, 6 * eps, 8 * eps]
    rep = closeness_report(U, single_inclusion, eps, radii)
    logs = np.log([v for _, v in rep])
    slopes = np.diff(logs) / np.diff(radii)
    # log-maxima decrease with slope at most -c/eps for some c > 0
    assert np.all(slopes < 0)
    c = -np.max(slopes) * eps
    assert c > 0.1


def test_closeness_trivial_and_empty(single_inclusion):
    dom = DomainSpec(shape="disc", radius=1.0, h=0.02)
    gd = GridDomain(dom)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
    ones = PinningField(spec, dom, [], domain=gd)
    U = solve_U(ones, 0.05)
    rep = closeness_report(U, ones, 0.05, [0.1])
    assert rep[0][1] == pytest.approx(0.0, abs=1e-12)
    # region at distance 100 from the single inclusion's boundary is empty
    U1 = solve_U(single_inclusion, 0.02)
    rep1 = closeness_report(U1, single_inclusion, 0.02, [100.0])
    assert rep1[0][1] is None


def test_maximum_principle_randomized():
    rng = np.random.default_rng(5)
    for trial in range(3):
        delta = rng.uniform(0.2, 0.4)
        lam = rng.uniform(0.3, 0.9)
        b = rng.uniform(0.3, 0.8)
        dom = DomainSpec(shape="disc", radius=1.0, h=0.02)
        f = build_periodic(PeriodicPinningSpec(b=b, lam=lam, delta=delta), dom)
        U = solve_U(f, 0.04)
        act = f.domain.active
        assert U.values[act].min() >= b - 1e-10
        assert U.values[act].max() <= 1.0 + 1e-10


def test_near_periodicity():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.005)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
    f = build_periodic(spec, dom)
    eps = 0.01
    U = solve_U(f, eps)
    scale = spec.lam * spec.delta
    R = (0.5 - 0.25) * scale / 2.0
    rep = closeness_report(U, f, eps, [R])
    bound = 10.0 * rep[0][1]
    g = f.domain.grid
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        x, y = rng.uniform(-0.11, 0.11, size=2)
        for (k, l) in ((1, 0), (0, 1), (-1, 1)):
            i0, j0 = g.nearest_node(x, y)
            i1, j1 = g.nearest_node(x + k * 0.25, y + l * 0.25)
            worst = max(worst, abs(float(U.values[i0, j0]) - float(U.values[i1, j1])))
    assert worst <= bound


def test_grid_convergence_smooth_coefficient():
    # smooth synthetic coefficient: second-order convergence of the solver
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25)
    eps = 0.1
    sols = {}
    for h in (0.04, 0.02, 0.01):
        dom = DomainSpec(shape="disc", radius=1.0, h=h)
        gd = GridDomain(dom)
        f = PinningField(spec, dom, [], domain=gd)
        X, Y = gd.grid.nodes()
        f.values = 1.0 - 0.5 * np.exp(-(X ** 2 + Y ** 2) / 0.08)
        sols[h] = solve_U(f, eps)
    # compare by interpolation at fixed interior sample points
    from glpin.vortices import _bilinear

    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.6, 0.6, size=(200, 2))
    vals = {h: _bilinear(U.values, U.domain.grid, pts[:, 0], pts[:, 1])
            for h, U in sols.items()}
    e1 = np.max(np.abs(vals[0.04] - vals[0.02]))
    e2 = np.max(np.abs(vals[0.02] - vals[0.01]))
    order = math.log2(e1 / e2)
    assert order >= 1.8


def test_energy_converges_under_refinement():
    # the vertex-lumped quadrature makes the discrete minimum approach its
    # limit from below; assert the Cauchy increments shrink
    from glpin.energies import energy_E

    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.5)
    eps = 0.05
    energies = []
    for h in (0.02, 0.01, 0.005):
        dom = DomainSpec(shape="disc", radius=1.0, h=h)
        f = build_periodic(spec, dom)
        U = solve_U(f, eps)
        energies.append(energy_E(U, f, eps).total)
    d1 = abs(energies[1] - energies[0])
    d2 = abs(energies[2] - energies[1])
    assert d2 < d1


def test_nonconvergence_reports_residual():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.02)
    f = build_periodic(PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.25), dom)
    with pytest.raises(NonConvergenceError) as err:
        solve_U(f, 0.04, SolverParams(tol=1e-16, max_iter=2, continuation=(1.0,)))
    assert err.value.residual is not None
