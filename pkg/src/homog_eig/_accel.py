"""Optional numba acceleration for the hot kernels.

Set ``HOMOG_EIG_NUMBA=0`` before import to run every kernel through its
pure-numpy/python path. The jitted and plain variants of each kernel stay
importable side by side so they can be compared (see ``benchmarks/``).
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("HOMOG_EIG_NUMBA", "1").strip().lower()
NUMBA_ENABLED = numba is not None and _flag not in ("0", "false", "no", "off")


def njit(fn):
    """Compile ``fn`` with numba (nopython, nogil, cached); identity if unavailable."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def choose(jitted, plain):
    return jitted if NUMBA_ENABLED else plain
