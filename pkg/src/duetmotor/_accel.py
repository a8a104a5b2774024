"""Optional numba acceleration.

Set ``DUETMOTOR_DISABLE_NUMBA=1`` to force the pure-numpy code paths.
"""
import os

_disabled = os.environ.get("DUETMOTOR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise return the function unchanged."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def use_numba(flag=None):
    """Resolve a per-call ``use_numba`` argument against the global setting."""
    if flag is None:
        return HAVE_NUMBA
    return bool(flag) and HAVE_NUMBA
