"""Numba switch.

Hot loops are written once as plain Python/NumPy and compiled with
``numba.njit`` when numba is importable.  Setting ``CADMRG_DISABLE_NUMBA=1``
forces the pure-NumPy fallbacks in :mod:`cadmrg.kernels`.
"""
import os

_disabled = os.environ.get("CADMRG_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
