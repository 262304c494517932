"""Backend dispatch for the convolution kernels.

The compiled extension is used when available; set ``NETINV_PURE_PYTHON=1``
to force the numpy fallback (the benchmark uses this to compare both).
"""

import os

import numpy as np

from . import _convnp

if os.environ.get("NETINV_PURE_PYTHON"):
    _impl = _convnp
    BACKEND = "numpy"
else:
    try:
        from . import _convkernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _convnp
        BACKEND = "numpy"


def _c3(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def conv2d_forward(x, k, stride, pad):
    return _impl.conv2d_forward(_c3(x), _c3(k), stride, pad)


def conv2d_adjoint(u, k, stride, pad, h, w):
    return _impl.conv2d_adjoint(_c3(u), _c3(k), stride, pad, h, w)


def conv2d_kernel_grad(x, u, stride, pad, kh, kw):
    return _impl.conv2d_kernel_grad(_c3(x), _c3(u), stride, pad, kh, kw)
