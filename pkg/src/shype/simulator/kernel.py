"""Kernel selection: compiled extension when available, else pure Python.

Set SHYPE_KERNEL=python or SHYPE_KERNEL=compiled to force a backend.
"""

from __future__ import annotations

import os

from . import _kernel_py

_forced = os.environ.get("SHYPE_KERNEL", "").strip().lower()

if _forced == "python":
    _impl = _kernel_py
    BACKEND = "python"
else:
    try:
        from .. import _simcore as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = _kernel_py
        BACKEND = "python"

advance = _impl.advance

END = _kernel_py.END
STOCH = _kernel_py.STOCH
GUARD = _kernel_py.GUARD
ERR_NONFINITE = _kernel_py.ERR_NONFINITE
ERR_NEGATIVE_RATE = _kernel_py.ERR_NEGATIVE_RATE
