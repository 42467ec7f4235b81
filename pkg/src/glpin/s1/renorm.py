"""Renormalized energy of point vortices, by two independent routes.

Route (a) subtracts the logarithmic core term pi*d*|ln rho| from the
perforated-domain minimum at two hole radii and Richardson-extrapolates
(error model O(rho^2)); on a disc with a single unit-degree point the
perforated minimum is computed exactly by a conformal reduction to a
concentric annulus and a Fourier solve, otherwise by the Cartesian grid
solver.

Route (b) assembles the classical point-vortex expression from the regular
part of the generating potential (Neumann data = winding density of the
trace minus the point-source fluxes), spectrally on the disc.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from ..grids import DomainSpec
from .perforated import PerforatedDomain, minimize_I


def _mobius(a):
    ac = complex(a)

    def T(z):
        return (z - ac) / (1 - ac.conjugate() * z)

    return T


def _image_circle(T, center, radius):
    """Image circle of |z - center| = radius under a Mobius map (3 points)."""
    pts = [T(center + radius * cmath.exp(1j * t)) for t in (0.0, 2.1, 4.2)]
    (x1, y1), (x2, y2), (x3, y3) = [(p.real, p.imag) for p in pts]
    ax, ay = x2 - x1, y2 - y1
    bx, by = x3 - x1, y3 - y1
    den = 2 * (ax * by - ay * bx)
    cx = x1 + (by * (ax * ax + ay * ay) - ay * (bx * bx + by * by)) / den
    cy = y1 + (ax * (bx * bx + by * by) - bx * (ax * ax + ay * ay)) / den
    r = math.hypot(x1 - cx, y1 - cy)
    return complex(cx, cy), r


def _concentric_params(c, r):
    """Mobius parameter p (after rotating c onto the positive axis) sending
    the eccentric circle pair (unit circle, circle(c, r)) to a concentric
    annulus; returns (phase, p, inner_radius)."""
    if abs(c) < 1e-15:
        return 1.0, 0.0, r
    phase = c / abs(c)
    zp = abs(c) + r
    zm = abs(c) - r
    s = zp + zm
    prod = zp * zm
    disc = (1 + prod) ** 2 - s * s
    p = ((1 + prod) - math.sqrt(disc)) / s
    r_ann = abs((zp - p) / (1 - p * zp))
    return phase, p, r_ann


def _annulus_energy(phi0_samples, mu):
    """Minimal cylinder energy with Dirichlet phase phi0 at s=0, natural
    condition at s=-mu, unit winding: pi*mu + 2 pi sum_k k tanh(k mu)|f_k|^2."""
    n = phi0_samples.size
    fk = np.fft.rfft(phi0_samples) / n
    k = np.arange(fk.size, dtype=float)
    modal = 2 * math.pi * np.sum(k[1:] * np.tanh(k[1:] * mu) * np.abs(fk[1:]) ** 2)
    return math.pi * mu + float(modal)


def _disc_I_exact(dom: DomainSpec, g_theta, point, rho_phys, n_samples=4096):
    """Exact alpha=1 perforated minimum on the disc, one degree-1 hole."""
    R = dom.radius
    cx, cy = dom.center
    a = (complex(point[0], point[1]) - complex(cx, cy)) / R
    rho = rho_phys / R
    T1 = _mobius(a)
    c1, r1 = _image_circle(T1, a, rho)
    phase, p, r_ann = _concentric_params(c1, r1)
    mu = -math.log(r_ann)
    th = 2 * math.pi * np.arange(n_samples) / n_samples
    z = np.exp(1j * th)
    w = phase * (z + p) / (1 + p * z)            # S^{-1}
    ac = complex(a)
    pre = (w + ac) / (1 + ac.conjugate() * w)    # T1^{-1}, still on |z| = 1
    gv = np.asarray(g_theta(np.angle(pre)), dtype=complex)
    lift = gv * np.exp(-1j * th)
    dphi = np.angle(np.roll(lift, -1) / lift)
    phi0 = np.concatenate([[0.0], np.cumsum(dphi[:-1])]) + np.angle(lift[0])
    return _annulus_energy(phi0, mu)


def _disc_route_b(dom: DomainSpec, g_theta, points, degrees,
                  n_samples=8192, n_modes=2048):
    """Point-vortex renormalized energy from the regular part (disc)."""
    R = dom.radius
    cx, cy = dom.center
    n = n_samples
    th = 2 * math.pi * np.arange(n) / n
    z = np.exp(1j * th)
    gv = np.asarray(g_theta(th), dtype=complex)
    dphi = np.angle(np.roll(gv, -1) / gv)
    wind = dphi / (2 * math.pi / n)        # d(arg g)/dtheta at samples
    a = [((p[0] - cx) + 1j * (p[1] - cy)) / R for p in points]

    q = wind.astype(float).copy()
    for ai, di in zip(a, degrees):
        num = 1.0 - (np.conj(ai) * z).real
        den = np.abs(z - ai) ** 2
        q -= di * num / den
    qk = np.fft.rfft(q) / n
    K = min(n_modes, qk.size - 1)
    ck = qk[1:K + 1] / np.arange(1, K + 1)

    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1:K + 1] = ck
    R_boundary = np.fft.irfft(spec * n)     # sum_k 2 Re(c_k e^{ik theta})

    def R_reg(zz):
        pw = np.power(zz, np.arange(1, K + 1))
        return 2.0 * float(np.real(np.sum(ck * pw)))

    Phi_b = R_boundary.copy()
    for ai, di in zip(a, degrees):
        Phi_b += di * np.log(np.abs(z - ai))
    half_int = 0.5 * float(np.sum(Phi_b * wind) * (2 * math.pi / n))

    W = half_int
    for i, (ai, di) in enumerate(zip(a, degrees)):
        W -= math.pi * di * R_reg(ai)
        for j, (aj, dj) in enumerate(zip(a, degrees)):
            if j != i:
                W -= math.pi * di * dj * math.log(abs(ai - aj))
    # dilation from the unit disc back to radius R
    W -= math.pi * sum(d * d for d in degrees) * math.log(R)
    return W


def renormalized_energy(dom: DomainSpec, g_theta, points, degrees=None,
                        rho_pair=(0.05, 0.025), grid_h: float | None = None):
    """Renormalized energy by both routes; rho_pair are physical hole radii.

    Returns {"extrapolation", "direct", "gap", "raw"}.
    """
    points = [(float(p[0]), float(p[1])) for p in points]
    if degrees is None:
        degrees = [1] * len(points)
    d_tot = sum(degrees)
    rho1, rho2 = max(rho_pair), min(rho_pair)

    if dom.shape == "disc" and len(points) == 1 and degrees[0] == 1:
        I1 = _disc_I_exact(dom, g_theta, points[0], rho1)
        I2 = _disc_I_exact(dom, g_theta, points[0], rho2)
    else:
        h = grid_h if grid_h is not None else dom.h
        gdom = DomainSpec(shape=dom.shape, radius=dom.radius, width=dom.width,
                          height=dom.height, center=dom.center, h=h)
        I1 = _grid_I(gdom, g_theta, points, degrees, rho1)
        I2 = _grid_I(gdom, g_theta, points, degrees, rho2)
    W1 = I1 - math.pi * d_tot * abs(math.log(rho1))
    W2 = I2 - math.pi * d_tot * abs(math.log(rho2))
    ratio = (rho1 / rho2) ** 2
    W_extrap = (ratio * W2 - W1) / (ratio - 1.0)

    if dom.shape != "disc":
        raise NotImplementedError(
            "the direct route is implemented for disc domains only")
    W_direct = _disc_route_b(dom, g_theta, points, degrees)
    return {
        "extrapolation": W_extrap,
        "direct": W_direct,
        "gap": abs(W_extrap - W_direct),
        "raw": {"rho": [rho1, rho2], "W": [W1, W2]},
    }


def _grid_I(gdom: DomainSpec, g_theta, points, degrees, rho):
    from ..minimize import BoundaryData, boundary_winding

    pd = PerforatedDomain(gdom, tuple(points), rho)
    gd = pd.grid_domain()
    g = gd.grid
    X, Y = g.nodes()
    px, py = gd.dom.project_boundary(X, Y)
    cx, cy = gd.dom.center
    values = np.asarray(g_theta(np.arctan2(py - cy, px - cx)), dtype=complex)
    w = boundary_winding(gd, values)
    bd = BoundaryData(degree=w, values=values, winding=w)
    e, _ = minimize_I(pd, alpha=None, degrees=degrees, g=bd)
    return e
