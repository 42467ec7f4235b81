"""Cell problems, effective matrix, unfolding, and the limit phase equation."""

import math

import numpy as np
import pytest

from glpin.grids import ComplexField, DomainSpec, GridDomain, ScalarField
from glpin.homog import (CellField, HomogenizedMatrix, folded_integral,
                         homogenized_matrix, homogenized_phase,
                         inclusion_cell_field, solve_cell, unfold)


def test_constant_cell():
    M = homogenized_matrix(CellField(np.full((32, 32), 0.7)))
    assert M.a11 == pytest.approx(0.7, abs=1e-10)
    assert M.a22 == pytest.approx(0.7, abs=1e-10)
    assert abs(M.a12) <= 1e-10
    assert M.asymmetry <= 1e-12


def test_constant_correctors_vanish():
    chi = solve_cell(CellField(np.full((32, 32), 0.4)), 1)
    assert np.max(np.abs(chi)) <= 1e-12


def test_laminate_means():
    n = 256
    H = np.where(np.arange(n)[:, None] < n // 2, 0.3, 0.9) * np.ones((n, n))
    M = homogenized_matrix(CellField(H))
    harm = 2 * 0.3 * 0.9 / (0.3 + 0.9)
    arith = 0.5 * (0.3 + 0.9)
    assert M.a11 == pytest.approx(harm, abs=1e-3)
    assert M.a22 == pytest.approx(arith, abs=1e-3)
    assert abs(M.a12) <= 1e-10


def test_laminate_transverse_corrector_vanishes():
    n = 64
    H = np.where(np.arange(n)[:, None] < n // 2, 0.3, 0.9) * np.ones((n, n))
    chi2 = solve_cell(CellField(H), 2)
    assert np.max(np.abs(chi2)) <= 1e-10


def test_laminate_flux_constant():
    n = 64
    H = np.where(np.arange(n)[:, None] < n // 2, 0.25, 1.0) * np.ones((n, n))
    chi1 = solve_cell(CellField(H), 1)
    dchi = np.roll(chi1, -1, axis=0) - chi1
    wx = 0.5 * (H + np.roll(H, 1, axis=1))
    flux = wx * (1.0 / n - dchi)
    assert flux.std() <= 1e-12 * abs(flux.mean())


def test_cell_residual_and_mean():
    rng = np.random.default_rng(0)
    H = CellField(rng.uniform(0.25, 1.0, size=(48, 48)))
    chi = solve_cell(H, 1, rtol=1e-13)
    assert abs(chi.mean()) <= 1e-13
    # weak residual: a(chi, psi) - rhs(psi) for random periodic psi
    from glpin.homog import _periodic_system

    A, wx, wy = _periodic_system(H.values)
    n = 48
    b = np.zeros(n * n)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    n0 = (ii * n + jj).ravel()
    n1 = (((ii + 1) % n) * n + jj).ravel()
    wv = 2.0 * wx.ravel() / n
    np.subtract.at(b, n0, wv)
    np.add.at(b, n1, wv)
    res = A @ chi.ravel() - b
    assert np.max(np.abs(res)) <= 1e-10


def test_transpose_symmetry():
    rng = np.random.default_rng(4)
    H = rng.uniform(0.3, 1.0, size=(40, 40))
    M = homogenized_matrix(CellField(H))
    Mt = homogenized_matrix(CellField(H.T.copy()))
    assert M.a11 == pytest.approx(Mt.a22, abs=1e-9)
    assert M.a22 == pytest.approx(Mt.a11, abs=1e-9)
    assert M.a12 == pytest.approx(Mt.a12, abs=1e-9)


def test_voigt_reuss_random_cells():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = 32
        H = np.where(rng.uniform(size=(n, n)) < 0.5, 0.25, 1.0)
        M = homogenized_matrix(CellField(H))
        ev = M.eigenvalues()
        harm = 1.0 / np.mean(1.0 / H)
        arith = np.mean(H)
        assert ev[0] >= harm - 1e-6
        assert ev[1] <= arith + 1e-6


def test_inclusion_trend_towards_identity():
    devs = []
    for lam in (0.4, 0.2, 0.1):
        H = inclusion_cell_field(0.5, lam, n=128)
        M = homogenized_matrix(H)
        devs.append(np.abs(M.as_array() - np.eye(2)).max())
    assert devs[0] > devs[1] > devs[2]


def test_inclusion_cell_has_corner_quarters():
    H = inclusion_cell_field(0.5, 0.5, n=64)
    v = H.values
    assert v[0, 0] == 0.25 and v[-1, -1] == 0.25   # corner quarters
    assert v[32, 32] == 1.0                         # cell center clean


def test_unfold_integral_identity_and_block_structure():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.01)
    gd = GridDomain(dom)
    X, Y = gd.grid.nodes()
    f = ScalarField(gd, np.sin(3 * X) * np.cos(2 * Y) + 1.5)
    uf = unfold(f, 0.05)
    assert uf.integral() == folded_integral(f, 0.05)   # bitwise equality
    # constant field: constant on inside cells, zero on the boundary layer
    fc = ScalarField(gd, np.full_like(X, 2.5))
    ufc = unfold(fc, 0.05)
    inside = ufc.cell_mask
    assert np.all(ufc.blocks[inside] == 2.5)
    assert np.all(ufc.blocks[~inside] == 0.0)


def test_unfold_periodic_field_independent_of_x():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.01)
    gd = GridDomain(dom)
    X, Y = gd.grid.nodes()
    per = ScalarField(gd, np.sin(2 * np.pi * X / 0.05) * np.cos(2 * np.pi * Y / 0.05))
    uf = unfold(per, 0.05)
    blocks = uf.blocks[uf.cell_mask]
    assert np.max(np.abs(blocks - blocks[0])) <= 1e-12


def test_unfold_alignment_error():
    dom = DomainSpec(shape="disc", radius=1.0, h=0.01)
    gd = GridDomain(dom)
    f = ScalarField(gd, np.ones((gd.grid.nx, gd.grid.ny)))
    with pytest.raises(ValueError, match="multiple"):
        unfold(f, 0.0314159)


def test_phase_identity_matches_perforated():
    # A = Id reproduces the homogeneous perforated solve
    from glpin.s1.perforated import PerforatedDomain, minimize_I

    dom = DomainSpec(shape="disc", radius=1.0, h=1 / 128)
    pd = PerforatedDomain(dom, ((0.0, 0.0),), 0.06)
    gd = pd.grid_domain()
    eI, _ = minimize_I(pd)
    from glpin.minimize import make_boundary_data

    g = make_boundary_data(1, gd)
    M = HomogenizedMatrix(a11=1.0, a12=0.0, a22=1.0)
    phi, e = homogenized_phase(M, gd, [(0.0, 0.0)], g.values)
    assert e == pytest.approx(eI, rel=1e-10)


def test_phase_anisotropic_separable_solution():
    # Dirichlet data of a separable solution of div(A grad u) = 0 on a
    # rectangle is reproduced at second order
    A = HomogenizedMatrix(a11=1.0, a12=0.0, a22=4.0)
    k = 2.0
    mu = k * math.sqrt(1.0 / 4.0)

    def exact(x, y):
        return np.sin(k * x) * np.sinh(mu * y)

    errs = []
    for h in (0.02, 0.01):
        dom = DomainSpec(shape="rect", width=2.0, height=1.6, h=h)
        gd = GridDomain(dom)
        from glpin.linsolve import PhaseProblem

        X, Y = gd.grid.nodes()
        prob = PhaseProblem(gd, coeff=A.as_array(), centers=(), degrees=(),
                            dirichlet_values=exact(X, Y))
        phi_active, _ = prob.solve(rtol=1e-12)
        phi = prob.phi_grid(phi_active)
        mask = gd.node_code == 1
        errs.append(np.max(np.abs((phi - exact(X, Y))[mask])))
    assert errs[0] / errs[1] >= 3.0   # ~ second order
    assert errs[1] <= 5e-4


def test_phase_isotropy_rotation_invariance():
    # for A = c Id the energy is invariant under rotating the vortex position
    dom = DomainSpec(shape="disc", radius=1.0, h=1 / 128)
    gd = GridDomain(dom)
    from glpin.minimize import make_boundary_data

    g = make_boundary_data(1, gd)
    M = HomogenizedMatrix(a11=0.8, a12=0.0, a22=0.8)
    _, e1 = homogenized_phase(M, gd, [(0.3, 0.0)], g.values)
    _, e2 = homogenized_phase(M, gd, [(0.0, 0.3)], g.values)
    assert e1 == pytest.approx(e2, rel=1e-4)


def test_cellfield_validation():
    with pytest.raises(ValueError):
        CellField(np.zeros((8, 8)))
    with pytest.raises(ValueError):
        CellField(np.ones((8, 4)))
