"""Numba switch.

Set ``ANYFOREST_DISABLE_NUMBA=1`` to run every kernel on the pure-numpy path.
"""
import os

_DISABLED = os.environ.get("ANYFOREST_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False


def njit(fn):
    """Compile ``fn`` in nopython mode with on-disk caching."""
    if _njit is None:
        raise RuntimeError("numba is unavailable or disabled")
    return _njit(cache=True, nogil=True)(fn)
