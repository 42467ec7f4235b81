"""One-dimensional two-phase interface profile.

The profile solves -U'' = U(1 - U^2) on the right half line and
-U'' = U(b^2 - U^2) on the left, increasing from b to 1 with C^1 matching
at the origin; it admits a closed form used as the oracle for the grid
solver.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def interface_constants(b: float) -> tuple[float, float]:
    """Constants (B, A) of the closed-form profile."""
    if not 0 < b < 1:
        raise ValueError("b must lie in (0, 1)")
    B = -(3 * b * b + 1 + 2 * b * math.sqrt(2 * (b * b + 1))) / (1 - b * b)
    A = (B * (1 + b) + 1 - b) / (B * (1 - b) + 1 + b)
    return B, A


def profile_1d_closed_form(b: float, x):
    """Closed-form interface profile; increasing, b at -inf, 1 at +inf."""
    B, A = interface_constants(b)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    ep = A * np.exp(math.sqrt(2.0) * x[pos])
    out[pos] = (ep - 1.0) / (ep + 1.0)
    en = B * np.exp(-b * math.sqrt(2.0) * x[~pos])
    out[~pos] = b * (en - 1.0) / (en + 1.0)
    return out if out.ndim else float(out)


class Newton1DError(RuntimeError):
    pass


def solve_1d_interface(b: float, L: float = 20.0, n: int = 4096,
                       tol: float = 1e-12, max_iter: int = 60):
    """Two-sided interface profile on [-L, L] with n grid points.

    Vertex-lumped potential with exact sub-cell volumes at the coefficient
    jump, so the discrete interface sits exactly at the origin for any grid.
    Returns (x, U).
    """
    if not 0 < b < 1:
        raise ValueError("b must lie in (0, 1)")
    if L < 10:
        raise ValueError("half length L must be at least 10")
    if n < 1000:
        raise ValueError("need at least 1000 grid points")
    x = np.linspace(-L, L, n)
    h = x[1] - x[0]
    # dual-cell volumes of {x<0} and {x>=0} around each node
    lo = np.maximum(x - h / 2.0, -L)
    hi = np.minimum(x + h / 2.0, L)
    vol_m = np.clip(np.minimum(hi, 0.0) - lo, 0.0, None)
    vol_p = np.clip(hi - np.maximum(lo, 0.0), 0.0, None)

    U = b + (1.0 - b) / (1.0 + np.exp(-2.0 * x))
    U[0], U[-1] = b, 1.0

    def residual(u):
        # gradient of E = sum h/2 ((du)/h)^2 + sum 1/4[(b^2-u^2)^2 vol- + (1-u^2)^2 vol+]
        r = np.zeros_like(u)
        d = np.diff(u) / h
        r[:-1] -= d
        r[1:] += d
        r += -(b * b - u * u) * u * vol_m - (1.0 - u * u) * u * vol_p
        return r

    def jac(u):
        main = np.full(n, 2.0 / h)
        main[0] = main[-1] = 1.0 / h
        main += (3.0 * u * u - b * b) * vol_m + (3.0 * u * u - 1.0) * vol_p
        off = np.full(n - 1, -1.0 / h)
        return main, off

    free = slice(1, n - 1)
    for it in range(max_iter):
        r = residual(U)
        rn = float(np.max(np.abs(r[free])))
        if rn < tol:
            return x, U
        main, off = jac(U)
        A = sp.diags([off[1:-1], main[free], off[1:-1]], [-1, 0, 1], format="csc")
        dU = spla.spsolve(A, -r[free])
        t = 1.0
        e0 = _energy_1d(U, b, h, vol_m, vol_p)
        for _ in range(40):
            Ut = U.copy()
            Ut[free] += t * dU
            if _energy_1d(Ut, b, h, vol_m, vol_p) <= e0 + 1e-14 * abs(e0):
                break
            t *= 0.5
        U[free] += t * dU
    raise Newton1DError(f"1D interface Newton did not converge, residual {rn:.3e}")


def _energy_1d(u, b, h, vol_m, vol_p):
    d = np.diff(u)
    pot = 0.25 * ((b * b - u * u) ** 2 * vol_m + (1.0 - u * u) ** 2 * vol_p)
    return float(np.sum(d * d) / (2.0 * h) + np.sum(pot))
