"""Numba switch.

Kernels are compiled with ``numba.njit`` unless ``CONTACT_HJ_DISABLE_NUMBA``
is set to a non-empty value other than ``0``, or numba is not importable.
In either case the pure-numpy code paths are used.
"""

import os

_flag = os.environ.get("CONTACT_HJ_DISABLE_NUMBA", "").strip()
DISABLED_BY_ENV = _flag not in ("", "0")

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None

USE_NUMBA = _njit is not None and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when numba is active, identity otherwise."""
    if _njit is None or DISABLED_BY_ENV:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    return _njit(*args, **kwargs)
