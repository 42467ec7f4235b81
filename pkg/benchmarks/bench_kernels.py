#!/usr/bin/env python3
"""Benchmark the numba energy/gradient kernel against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [--size 401] [--reps 50]

The same comparison drives a full reduced-energy minimisation on the
homogeneous disc, which is the dominant cost of the pipelines.  Select the
backend for package-level runs with GLPIN_NUMBA=0|1.
"""

import argparse
import time

import numpy as np


def bench_kernel(size, reps):
    from glpin.kernels._numpy import energy_grad as k_np

    try:
        from glpin.kernels._numba import energy_grad as k_nb
    except ImportError:
        k_nb = None

    rng = np.random.default_rng(0)
    ur = rng.normal(size=(size, size))
    ui = rng.normal(size=(size, size))
    wx = np.abs(rng.normal(size=(size - 1, size)))
    wy = np.abs(rng.normal(size=(size, size - 1)))
    pvol = np.abs(rng.normal(size=(size, size)))
    ptar = np.ones((size, size))
    gr = np.zeros_like(ur)
    gi = np.zeros_like(ui)

    rows = []
    for name, fn in (("numpy", k_np), ("numba", k_nb)):
        if fn is None:
            rows.append((name, None, None))
            continue
        fn(ur, ui, wx, wy, pvol, ptar, gr, gi, True)   # warm up / compile
        t0 = time.perf_counter()
        for _ in range(reps):
            e = fn(ur, ui, wx, wy, pvol, ptar, gr, gi, True)
        dt = (time.perf_counter() - t0) / reps
        rows.append((name, dt, e[0] + e[1]))
    return rows


def bench_minimize(h, backends):
    import importlib
    import os
    import subprocess
    import sys

    rows = []
    code = f"""
import time
import numpy as np
from glpin.grids import DomainSpec, GridDomain, ScalarField
from glpin.minimize import make_boundary_data, minimize_F
from glpin.scalar import SolverParams
dom = DomainSpec(shape="disc", radius=1.0, h={h})
gd = GridDomain(dom)
U = ScalarField(gd, np.ones((gd.grid.nx, gd.grid.ny)))
g = make_boundary_data(1, gd)
t0 = time.time()
res = minimize_F(U, 0.02, g, params=SolverParams(continuation=(2.0, 1.0)),
                 restarts=1, max_iter=4000, tol=1e-5)
print(f"{{time.time()-t0:.3f}} {{res.energy:.9f}} {{res.iterations}}")
"""
    for backend in backends:
        env = dict(os.environ, GLPIN_NUMBA="1" if backend == "numba" else "0")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True)
        if out.returncode != 0:
            rows.append((backend, None, out.stderr.strip().splitlines()[-1]))
            continue
        dt, energy, iters = out.stdout.split()
        rows.append((backend, float(dt), f"E={energy} iters={iters}"))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=401)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--h", type=float, default=0.01,
                    help="grid spacing for the end-to-end minimisation")
    args = ap.parse_args()

    print(f"kernel energy+gradient on a {args.size}x{args.size} grid "
          f"({args.reps} reps):")
    base = None
    for name, dt, val in bench_kernel(args.size, args.reps):
        if dt is None:
            print(f"  {name:6s}  unavailable")
            continue
        if base is None:
            base = dt
        print(f"  {name:6s}  {1e3 * dt:8.3f} ms/call   speedup x{base / dt:5.2f}   "
              f"energy {val:.6e}")

    print(f"\nend-to-end minimisation (homogeneous disc, h={args.h}):")
    for name, dt, info in bench_minimize(args.h, ("numpy", "numba")):
        if dt is None:
            print(f"  {name:6s}  failed: {info}")
        else:
            print(f"  {name:6s}  {dt:8.3f} s   {info}")


if __name__ == "__main__":
    main()
