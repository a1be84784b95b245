"""Permanent kernels: the compiled extension when available, else the pure-Python fallback.

Set ``SCALINGLAB_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

if os.environ.get("SCALINGLAB_PURE", "") not in ("", "0"):
    from ._kernels_py import permanent, permanent_batch
    BACKEND = "python"
else:
    try:
        from ._kernels import permanent, permanent_batch
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernels_py import permanent, permanent_batch
        BACKEND = "python"

__all__ = ["permanent", "permanent_batch", "BACKEND"]
