"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``BSLP_PURE_PYTHON=1`` before import to force the numpy fallback.
``BACKEND`` names the active implementation.
"""

import os

from . import _kernels_py as py_kernels

c_kernels = None
if os.environ.get("BSLP_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as c_kernels
    except ImportError:  # extension not built
        c_kernels = None

_impl = c_kernels if c_kernels is not None else py_kernels
BACKEND = "cython" if c_kernels is not None else "python"

block_norms = _impl.block_norms
prox_scalar_array = _impl.prox_scalar_array
block_prox = _impl.block_prox
threshold_point = py_kernels.threshold_point


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return py_kernels
    if name == "cython":
        if c_kernels is None:
            raise RuntimeError("compiled kernels are not available")
        return c_kernels
    raise ValueError(f"unknown backend {name!r}")
