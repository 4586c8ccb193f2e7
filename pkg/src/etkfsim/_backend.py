"""Backend switch for the compiled kernels.

Numba is used when it imports cleanly and ``ETKFSIM_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``).  Everything in :mod:`etkfsim.kernels` has a
pure-numpy twin so the package keeps working without it.
"""
import os

_FLAG = os.environ.get("ETKFSIM_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by ETKFSIM_DISABLE_NUMBA")
    import numba
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if numba is not None:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]

    def _wrap(f):
        return f
    return _wrap


BACKEND = "numba" if HAS_NUMBA else "numpy"
