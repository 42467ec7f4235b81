"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time: set ``GLPIN_NUMBA=0`` in the
environment to force the numpy path (useful for debugging and for the
benchmark in ``benchmarks/bench_kernels.py``).
"""

import os

_flag = os.environ.get("GLPIN_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        from ._numba import energy_grad, BACKEND
    except ImportError:  # numba missing or broken: silently fall back
        from ._numpy import energy_grad, BACKEND
        USE_NUMBA = False
else:
    from ._numpy import energy_grad, BACKEND

__all__ = ["energy_grad", "BACKEND", "USE_NUMBA"]
