"""Renormalized energy: route agreement, symmetry, boundary repulsion."""

import math

import numpy as np
import pytest

from glpin.grids import DomainSpec
from glpin.s1.renorm import renormalized_energy

DISC = DomainSpec(shape="disc", radius=1.0, h=1 / 128)


def g1(th):
    return np.exp(1j * th)


def test_center_is_critical():
    res = renormalized_energy(DISC, g1, [(0.0, 0.0)])
    assert abs(res["extrapolation"]) <= 1e-10
    assert abs(res["direct"]) <= 1e-10


def test_routes_agree_and_match_closed_form():
    for aa in (0.2, 0.45, 0.7):
        res = renormalized_energy(DISC, g1, [(aa, 0.0)])
        exact = -math.pi * math.log(1 - aa * aa)
        assert res["gap"] <= 1e-2
        assert res["extrapolation"] == pytest.approx(exact, abs=1e-3)
        assert res["direct"] == pytest.approx(exact, abs=1e-3)


def test_gradient_vanishes_at_center():
    h = 4 / 128
    vals = {}
    for dx, dy in ((h, 0), (-h, 0), (0, h), (0, -h)):
        vals[(dx, dy)] = renormalized_energy(DISC, g1, [(dx, dy)])["extrapolation"]
    gx = (vals[(h, 0)] - vals[(-h, 0)]) / (2 * h)
    gy = (vals[(0, h)] - vals[(0, -h)]) / (2 * h)
    assert math.hypot(gx, gy) <= 1e-2


def test_increases_toward_boundary():
    radii = [0.0, 0.2, 0.4, 0.6, 0.8]
    vals = [renormalized_energy(DISC, g1, [(r, 0.0)])["extrapolation"]
            for r in radii]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_rotation_invariance():
    r1 = renormalized_energy(DISC, g1, [(0.5, 0.0)])["direct"]
    r2 = renormalized_energy(DISC, g1, [(0.0, 0.5)])["direct"]
    assert r1 == pytest.approx(r2, abs=1e-9)


def test_two_point_direct_repulsion():
    # the two-point renormalized energy blows up as the points merge
    def g2(th):
        return np.exp(2j * th)

    v_far = renormalized_energy(DISC, g2, [(-0.4, 0.0), (0.4, 0.0)],
                                grid_h=1 / 128)
    v_near = renormalized_energy(DISC, g2, [(-0.15, 0.0), (0.15, 0.0)],
                                 rho_pair=(0.036, 0.018), grid_h=1 / 192)
    assert v_near["direct"] > v_far["direct"]
    # grid extrapolation route stays within coarse agreement of the spectral
    # direct route for two points
    assert v_far["gap"] <= 0.5


def test_degree_scaled_disc():
    # dilation covariance: doubling the disc shifts W by -pi ln 2 for d = 1
    big = DomainSpec(shape="disc", radius=2.0, h=1 / 64)
    r_big = renormalized_energy(big, g1, [(0.0, 0.0)])
    assert r_big["direct"] == pytest.approx(-math.pi * math.log(2.0), abs=1e-9)
