"""Numba switch.

Set ``MFLAB_NUMBA=0`` in the environment to force the pure-numpy kernels.
The flag is read once at import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

_flag = os.environ.get("MFLAB_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _flag not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
