"""Reduced-energy minimisation: boundary data, homogeneous vortex case,
radial core profile."""

import math

import numpy as np
import pytest

from glpin.grids import ComplexField, DomainSpec, GridDomain, ScalarField
from glpin.minimize import (boundary_winding, make_boundary_data, minimize_F,
                            radial_profile)
from glpin.scalar import SolverParams
from glpin.vortices import detect_zeros


@pytest.fixture(scope="module")
def disc_domain():
    return GridDomain(DomainSpec(shape="disc", radius=1.0, h=0.01))


def test_boundary_winding(disc_domain):
    for d in (0, 1, 2, -1):
        g = make_boundary_data(d, disc_domain)
        assert g.winding == d
        vals = g.values[disc_domain.node_code == 2]
        assert np.allclose(np.abs(vals), 1.0)


def test_boundary_winding_rect():
    gd = GridDomain(DomainSpec(shape="rect", width=2.0, height=1.6, h=0.02))
    g = make_boundary_data(2, gd)
    assert g.winding == 2


def test_unimodular_scaling_of_winding(disc_domain):
    g = make_boundary_data(1, disc_domain)
    c = np.exp(1j * 0.73)
    assert boundary_winding(disc_domain, c * g.values) == 1


@pytest.fixture(scope="module")
def homogeneous_run(disc_domain):
    U = ScalarField(disc_domain, np.ones((disc_domain.grid.nx, disc_domain.grid.ny)))
    g = make_boundary_data(1, disc_domain)
    res = minimize_F(U, 0.02, g, params=SolverParams(continuation=(2.0, 1.0)),
                     restarts=1, max_iter=4000, tol=1e-5)
    return U, g, res


def test_homogeneous_single_vortex(homogeneous_run):
    U, g, res = homogeneous_run
    zs = detect_zeros(res.field, 0.5, eps=0.02)
    assert len(zs) == 1
    (z,) = zs.vortices
    assert z.degree == 1
    assert math.hypot(*z.position) <= 0.02
    assert not zs.phantom_dips


def test_minimizer_modulus_bound(homogeneous_run):
    _, _, res = homogeneous_run
    mod = np.abs(res.field.values)[res.field.domain.active]
    assert mod.max() <= 1.0 + 1e-6


def test_minimizer_energy_history_monotone(homogeneous_run):
    _, _, res = homogeneous_run
    energies = [e for _, _, e in res.history]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_minimizer_trace_is_g(homogeneous_run):
    _, g, res = homogeneous_run
    dir_mask = res.field.domain.node_code == 2
    assert np.array_equal(res.field.values[dir_mask], g.values[dir_mask])


def test_minimizer_beats_initial_guess(homogeneous_run):
    # descent: final energy no larger than the canonical initial guess
    from glpin.energies import energy_F
    from glpin.minimize import initial_guess, pick_vortex_seeds

    U, g, res = homogeneous_run
    seeds = pick_vortex_seeds(1, U.domain, None)
    v0 = ComplexField(U.domain, initial_guess(U.domain, g, seeds, 0.02, 1.0))
    assert res.energy <= energy_F(v0, U, 0.02).total + 1e-9


def test_degree_zero_gives_constant():
    gd = GridDomain(DomainSpec(shape="disc", radius=1.0, h=0.02))
    U = ScalarField(gd, np.ones((gd.grid.nx, gd.grid.ny)))
    g = make_boundary_data(0, gd)
    res = minimize_F(U, 0.05, g, restarts=1, max_iter=100, tol=1e-6)
    assert res.energy == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.field.values[gd.active], 1.0)


def test_incompatible_degree_error(disc_domain):
    from glpin.minimize import boundary_phase_shift

    g = make_boundary_data(2, disc_domain)
    with pytest.raises(ValueError, match="winding"):
        boundary_phase_shift(disc_domain, g.values, [(0.0, 0.0)], [1])


def test_radial_profile_shape():
    r, f, gamma, info = radial_profile(60.0, 6000)
    assert f[0] == 0.0
    assert np.min(np.diff(f)) >= -1e-12
    assert f[-1] >= 0.999
    assert gamma > 0


def test_radial_profile_gamma_between_radii():
    r, f, gamma, info = radial_profile(60.0, 6000)
    assert abs(info["gamma_at_full"] - info["gamma_at_half"]) <= 1e-3
    # E(B_R) - pi ln R decreases toward its limit
    assert info["gamma_at_full"] <= info["gamma_at_half"]


def test_radial_profile_against_shooting():
    # independent oracle: high-order shooting + adaptive quadrature
    from scipy.integrate import quad, solve_ivp

    def rhs(rr, y):
        f, fp = y
        return [fp, -fp / rr + f / rr ** 2 - f * (1 - f * f)]

    lo, hi = 0.5, 0.9
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        sol = solve_ivp(rhs, [1e-8, 25.0], [mid * 1e-8, mid], rtol=1e-11,
                        atol=1e-13, method="DOP853")
        if sol.y[0][-1] > 1.0:
            hi = mid
        else:
            lo = mid
    a = 0.5 * (lo + hi)
    sol = solve_ivp(rhs, [1e-8, 18.0], [a * 1e-8, a], rtol=1e-11, atol=1e-13,
                    dense_output=True, method="DOP853")

    def dens(rr):
        f, fp = sol.sol(rr)
        return (fp * fp + (f / rr) ** 2 + 0.5 * (1 - f * f) ** 2) * rr

    v9, _ = quad(dens, 1e-8, 9.0, limit=400)
    v18, _ = quad(dens, 1e-8, 18.0, limit=400)
    g9 = math.pi * v9 - math.pi * math.log(9)
    g18 = math.pi * v18 - math.pi * math.log(18)
    gamma_oracle = (4 * g18 - g9) / 3
    _, _, gamma, _ = radial_profile(60.0, 6000)
    assert gamma == pytest.approx(gamma_oracle, abs=5e-4)


def test_radial_profile_precondition():
    with pytest.raises(ValueError):
        radial_profile(10.0, 2000)


def test_classify_discs_on_converged_minimizer(homogeneous_run):
    # bad-disc count for a converged minimizer with one vortex: at least one,
    # bounded by a fixed constant
    from glpin.vortices import classify_discs

    U, g, res = homogeneous_run
    good, bad = classify_discs(res.field, U, 0.02)
    assert 1 <= len(bad) <= 30
    # all bad discs cluster near the single vortex
    r = 0.02 ** 0.25
    assert all(math.hypot(c[0], c[1]) <= 2 * r for c in bad.centers)
