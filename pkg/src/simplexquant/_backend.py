"""Select the kernel implementation at import time.

The compiled ``_ckernels`` module is preferred.  Setting the environment
variable ``SIMPLEXQUANT_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels

if os.environ.get("SIMPLEXQUANT_PURE_PYTHON") == "1":
    compiled_kernels = None
else:
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:  # extension not built
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"


def get_kernels(name=None):
    """Return the kernel module named ``"cython"`` or ``"python"`` (default: active)."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "cython":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not available")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
