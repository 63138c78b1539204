"""Numba switch.

Kernels are written in the subset of numpy that numba's nopython mode
understands, so the same source runs compiled or interpreted.  Set
``ADOPTPATHS_NUMBA=0`` before import to force the pure-numpy path.
"""

import os

ENV_FLAG = "ADOPTPATHS_NUMBA"
_REQUESTED = os.environ.get(ENV_FLAG, "1").strip().lower() not in ("0", "false", "no", "off")

numba = None
if _REQUESTED:
    try:
        import numba
    except ImportError:  # pragma: no cover
        numba = None

JIT_ENABLED = numba is not None


def njit_options():
    return dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


def jit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it untouched."""
    if JIT_ENABLED:
        return numba.njit(**njit_options())(fn)
    return fn
