"""Sweep-kernel selection: compiled extension when available, NumPy twin
otherwise.  Set LMCE_PURE_PY=1 to force the pure-Python kernel."""

import os

from . import _sweep_py

if os.environ.get("LMCE_PURE_PY"):
    _impl = _sweep_py
else:
    try:
        from . import _sweep as _impl
    except ImportError:  # extension not built; the NumPy twin is a full substitute
        _impl = _sweep_py

BACKEND = _impl.BACKEND
sweep_block = _impl.sweep_block
delta_minmax = _impl.delta_minmax
