"""Numba switch.

Kernels are written twice: a loop form compiled with numba and a
vectorised numpy form.  Set ``MAGSTARK_PURE_NUMPY=1`` (before import) to
route every dispatcher to the numpy form, e.g. when numba is unavailable or
to cross-check the two paths.
"""
import os

_flag = os.environ.get("MAGSTARK_PURE_NUMPY", "").strip().lower()

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _flag in ("", "0", "false", "no")


def njit(*args, **kwargs):
    """``numba.njit`` with caching on and the GIL released (kernels touch
    only arrays), or identity when numba is missing."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)

