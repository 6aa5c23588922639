"""Backend selection for the numeric kernels.

Set ``ARSM_DISABLE_NUMBA=1`` to force the pure-numpy path (useful for
debugging and for environments without a working LLVM).
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("ARSM_DISABLE_NUMBA", "").strip().lower() in _FALSY


def njit(func):
    """Compile ``func`` in nopython mode when numba is available, else return it unchanged."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True, fastmath=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
