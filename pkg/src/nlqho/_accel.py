"""Numba acceleration toggle.

Hot kernels ship in two versions: an @njit one and a pure-numpy fallback.
Setting NLQHO_DISABLE_NUMBA=1 (checked at import time) forces the fallback,
which is also used automatically when numba is not importable.
"""

import os

DISABLE_FLAG = "NLQHO_DISABLE_NUMBA"

if os.environ.get(DISABLE_FLAG, "") == "1":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False


def njit(*args, **kwargs):
    """numba.njit passthrough; identity decorator when numba is off."""
    if HAVE_NUMBA:
        import numba
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco
