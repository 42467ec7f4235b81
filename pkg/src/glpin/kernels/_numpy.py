"""Vectorised numpy fallback for the energy/gradient kernel.

Same arithmetic as the numba path; summation order differs, so results may
drift by a few ulps between backends.
"""

import numpy as np

BACKEND = "numpy"


def energy_grad(ur, ui, wx, wy, pvol, ptar, gr, gi, want_grad):
    dxr = ur[1:, :] - ur[:-1, :]
    dxi = ui[1:, :] - ui[:-1, :]
    dyr = ur[:, 1:] - ur[:, :-1]
    dyi = ui[:, 1:] - ui[:, :-1]
    e_dir = float(np.sum(wx * (dxr * dxr + dxi * dxi)) + np.sum(wy * (dyr * dyr + dyi * dyi)))
    m2 = ur * ur + ui * ui
    t = ptar - m2
    e_pot = float(np.sum(pvol * t * t))
    if want_grad:
        gr[:, :] = 0.0
        gi[:, :] = 0.0
        cxr = 2.0 * wx * dxr
        cxi = 2.0 * wx * dxi
        cyr = 2.0 * wy * dyr
        cyi = 2.0 * wy * dyi
        gr[:-1, :] -= cxr
        gr[1:, :] += cxr
        gi[:-1, :] -= cxi
        gi[1:, :] += cxi
        gr[:, :-1] -= cyr
        gr[:, 1:] += cyr
        gi[:, :-1] -= cyi
        gi[:, 1:] += cyi
        gr -= 4.0 * pvol * t * ur
        gi -= 4.0 * pvol * t * ui
    return e_dir, e_pot
