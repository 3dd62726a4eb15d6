"""Numba switch for the element kernels.

Set ``OPTCERT_NUMBA=0`` to force the vectorized numpy path even when numba
is installed. The flag is read once, at import time.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("OPTCERT_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(func):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
