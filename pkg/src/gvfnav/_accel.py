"""Optional numba acceleration for the hot kernels.

The scalar integration kernels in ``_kernels`` are compiled with numba when
available.  Setting the environment variable ``GVF_PURE_NUMPY`` to a truthy
value (``1``, ``true``, ``yes``, ``on``) before import skips compilation and
the package falls back to its pure numpy/Python paths.  The flag must be set
before the first gvfnav import; it is read once.
"""

import os

ENV_FLAG = "GVF_PURE_NUMPY"


def _pure_requested() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


def _resolve():
    if _pure_requested():
        return False
    try:
        from numba import njit  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _resolve()

if NUMBA_ENABLED:
    from numba import njit

    def jit_kernel(fn):
        return njit(fn, cache=True)
else:
    def jit_kernel(fn):
        return fn
