"""Selects the barrier-kernel implementation at import time.

The compiled Cython kernel is preferred; the NumPy fallback is used when the
extension is missing or when MIMOPOWER_PURE_PYTHON is set (useful for the
benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import _barrier_py

if os.environ.get("MIMOPOWER_PURE_PYTHON"):
    _impl = _barrier_py
    HAVE_COMPILED = False
else:
    try:
        from . import _barrier_c as _impl  # type: ignore[no-redef]

        HAVE_COMPILED = True
    except ImportError:
        _impl = _barrier_py
        HAVE_COMPILED = False

constraint_values = _impl.constraint_values
barrier_value = _impl.barrier_value
barrier_full = _impl.barrier_full

BACKEND_NAME = "compiled" if HAVE_COMPILED else "numpy"
