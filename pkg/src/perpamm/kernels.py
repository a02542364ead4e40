"""Kernel backend selection: compiled extension when available, else pure Python.

Set ``PERPAMM_PURE=1`` to force the pure-Python backend (used by the
benchmark and by tests that compare the two backends).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PERPAMM_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

deviation = _impl.deviation
base_fee = _impl.base_fee
dynamic_fee = _impl.dynamic_fee
skew = _impl.skew
utilization = _impl.utilization
