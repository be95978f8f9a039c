"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``NECORPIA_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("NECORPIA_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:  # extension not built
        _impl = _fallback
        COMPILED = False

rref = _impl.rref
matmul = _impl.matmul
hash_words = _impl.hash_words
terminal_scan = _impl.terminal_scan

BACKEND = "compiled" if COMPILED else "python"
