"""Numba switch.

Set ``VECTRANS_DISABLE_NUMBA=1`` to force the pure-numpy code paths. The flag is
read once at import time.
"""

import os

_FLAG = os.environ.get("VECTRANS_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Kernels are always compiled lazily so that the numpy fallback can be
    benchmarked against them even when ``USE_NUMBA`` is false.
    """
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
