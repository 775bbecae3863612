"""Backend selection for the hot kernels.

Numba is used when importable unless ``QMBC_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel dispatches to its vectorised numpy
twin.  Both paths are kept bit-for-bit equivalent and tested against each
other.
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    HAVE_NUMBA = False
    _numba_njit = None

USE_NUMBA = HAVE_NUMBA and os.environ.get("QMBC_DISABLE_NUMBA", "").strip().lower() in _FALSY

numba_default = {"nogil": True, "cache": True, "error_model": "numpy"}


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched."""
    if HAVE_NUMBA:
        return _numba_njit(**numba_default)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
