"""Kernel selection: compiled extension when importable, else pure Python."""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PBOX_EXPECT_PURE"):
    impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as impl  # type: ignore[attr-defined]
        COMPILED = True
    except ImportError:
        impl = _kernels_py
        COMPILED = False

simplex_loop = impl.simplex_loop
pivot = impl.pivot
window_argmin = impl.window_argmin
window_argmax = impl.window_argmax
