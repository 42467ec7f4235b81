"""End-to-end pipelines: quantization on diluted two-scale impurities, the
rigid-trace log law, and cross-validation of the polar and Cartesian
rigid-trace solvers."""

import math

import numpy as np
import pytest
import tomli

from glpin.config import parse_config
from glpin.grids import DomainSpec, GridDomain
from glpin.pinning import (DilutedPinningSpec, Inclusion, PeriodicPinningSpec,
                           PinningField, UnitInclusion, build_diluted)
from glpin.pipeline import run_quantization
from glpin.s1.perforated import PerforatedDomain, minimize_J
from glpin.s1.rings import j_problem_disc
from glpin.scalar import solve_U


def _cfg(text):
    return parse_config(tomli.loads(text))


def test_quantization_homogeneous_center():
    cfg = _cfg("""
schema = 1
[domain]
h = 0.02
[pinning]
kind = "none"
[experiment]
d = 1
eps = [0.04]
seed = 1
restarts = 1
[solver]
continuation = [2.0, 1.0]
min_max_iter = 3000
""")
    rec = run_quantization(cfg)
    assert not rec.failed
    vz = rec.payload["vortices"]["vortices"]
    assert len(vz) == 1
    assert math.hypot(*vz[0]["position"]) <= 0.05


def test_two_scale_largest_inclusion_wins():
    # a large stage-1 impurity off-center beats a small stage-2 impurity
    # closer to the center: hosting the vortex by the largest inclusion has
    # strictly lower energy, even though the macroscopic position is worse
    from glpin.minimize import make_boundary_data, minimize_F
    from glpin.scalar import SolverParams
    from glpin.vortices import detect_zeros

    dom = DomainSpec(shape="disc", radius=1.0, h=0.0075)
    spec = DilutedPinningSpec(b=0.5, lam=0.8, delta=0.35,
                              centers=(((0.30, 0.0),), ((-0.18, 0.0),)),
                              degree=1, eta=0.15)
    field = build_diluted(spec, dom)
    eps = 0.015
    U = solve_U(field, eps)
    g = make_boundary_data(1, field.domain)
    params = SolverParams(continuation=(2.0, 1.0))
    runs = {}
    for label, seed_pos in (("large", (0.30, 0.0)), ("small", (-0.18, 0.0))):
        res = minimize_F(U, eps, g, params=params, pinning=field,
                         seeds=[seed_pos], restarts=1, max_iter=5000, tol=2e-5)
        zs = detect_zeros(res.field, 0.5, eps=eps)
        assert len(zs) == 1
        host = field.hosting_inclusion(*zs.vortices[0].position)
        runs[label] = (res.energy, host.stage if host else None)
    assert runs["large"][1] == 1          # stays trapped by the big impurity
    assert runs["large"][0] < runs["small"][0]


@pytest.fixture(scope="module")
def fat_inclusion_solution():
    # single inclusion of radius 0.3 at the center, interfaces far from the
    # hole radii used below
    dom = DomainSpec(shape="disc", radius=1.0, h=0.005)
    gd = GridDomain(dom)
    spec = PeriodicPinningSpec(b=0.5, lam=0.5, delta=0.9)
    inc = Inclusion(center=(0.0, 0.0), scale=1.2, stage=1,
                    shape=UnitInclusion(kind="disc", r0=0.25))
    f = PinningField(spec, dom, [inc], domain=gd)
    U = solve_U(f, 0.01)
    return f, U


def test_rigid_trace_log_law_deep_inside(fat_inclusion_solution):
    # hole deep inside the impurity: J grows like pi b^2 |ln eps|
    _, U = fat_inclusion_solution
    vals = {}
    for rho in (0.02, 0.01, 0.005):
        vals[rho], _ = j_problem_disc(U, (0.0, 0.0), rho)
    s1 = (vals[0.01] - vals[0.02]) / math.log(2.0)
    s2 = (vals[0.005] - vals[0.01]) / math.log(2.0)
    target = math.pi * 0.25
    assert s1 == pytest.approx(target, rel=0.03)
    assert s2 == pytest.approx(target, rel=0.03)


def test_polar_vs_cartesian_rigid_solver(fat_inclusion_solution):
    # two independent discretisations of the same rigid-trace problem
    f, U = fat_inclusion_solution
    rho = 0.05
    e_polar, _ = j_problem_disc(U, (0.0, 0.0), rho)
    pd = PerforatedDomain(f.dom, ((0.0, 0.0),), rho)
    e_cart, _ = minimize_J(pd, alpha=U)
    assert e_polar == pytest.approx(e_cart, rel=5e-3)


def test_expansion_record_fields():
    cfg = _cfg("""
schema = 1
[domain]
h = 0.01
[pinning]
kind = "periodic"
b = 0.5
lambda = 0.5
delta = 0.25
[experiment]
kind = "expansion"
d = 1
eps = [0.04, 0.028]
seed = 3
restarts = 1
[solver]
continuation = [2.0, 1.0]
min_max_iter = 3000
""")
    from glpin.pipeline import run_expansion

    rec = run_expansion(cfg)
    assert not rec.failed, rec.error
    rows = rec.payload["rows"]
    assert [r["eps"] for r in rows] == [0.04, 0.028]
    assert all(r["F"] > r["J"] > 0 for r in rows)
    assert rec.payload["gamma_self_consistency"] <= 1e-3


def test_failed_run_is_recorded():
    cfg = _cfg("""
schema = 1
[domain]
h = 0.02
[pinning]
kind = "none"
[experiment]
d = 1
eps = [0.04]
[solver]
continuation = [1.0]
tol = 1e-16
max_iter = 1
""")
    # pinning "none" solves instantly; force failure through the minimiser
    cfg.min_max_iter = 1
    cfg.min_tol = 1e-14
    rec = run_quantization(cfg)
    assert rec.failed
    assert rec.error


def test_emit_plots_expansion_monotone(tmp_path):
    from glpin.pipeline import emit_plots

    rec = {"schema": 1, "kind": "expansion", "config_hash": "cafe", "failed": False,
           "payload": {"rows": [
               {"eps": 0.04, "F": 10.0, "J": 9.0, "residual": 0.6},
               {"eps": 0.028, "F": 10.5, "J": 9.8, "residual": 0.4}]},
           "timings": {}, "version": "x"}
    emit_plots([rec], tmp_path)
    lines = (tmp_path / "expansion.csv").read_text().splitlines()
    eps_col = [float(l.split(",")[1]) for l in lines[2:]]
    assert eps_col == sorted(eps_col, reverse=True)
