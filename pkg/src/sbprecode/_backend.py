"""Pick the kernel backend once, at import.

Set ``SBPRECODE_PURE_PYTHON=1`` to force the NumPy fallback even when the
compiled extension is importable.
"""
import os

if os.environ.get("SBPRECODE_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
