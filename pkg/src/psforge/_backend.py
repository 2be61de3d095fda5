"""Pick the kernel implementation once, at import.

The compiled ``_kernels`` extension is preferred; ``PSFORGE_PURE_PYTHON=1``
forces the fallback.
"""
import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if not os.environ.get("PSFORGE_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def available_backends():
    """Importable kernel modules keyed by name (for tests and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        return out
    out["cython"] = _compiled
    return out
