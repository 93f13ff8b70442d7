"""JIT switch for the hot kernels.

Set ``OPTDESIGN_NO_JIT=1`` to run every kernel as plain Python/numpy. The
kernel sources are shared, so both routes execute the same arithmetic.
"""

import os

NO_JIT = os.environ.get("OPTDESIGN_NO_JIT", "0").lower() not in ("", "0", "false", "no")

if not NO_JIT:
    try:
        import numba
    except ImportError:  # pragma: no cover
        NO_JIT = True

BACKEND = "numpy" if NO_JIT else "numba"


def njit(fn=None, **options):
    """``numba.njit`` with project defaults, or identity when JIT is off."""
    if fn is None:
        return lambda f: njit(f, **options)
    if NO_JIT:
        return fn
    options.setdefault("cache", True)
    options.setdefault("nogil", True)
    return numba.njit(fn, **options)
