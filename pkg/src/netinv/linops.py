"""Affine linear operators: dense matrices, strided convolutions and their
transposes, plus power-iteration estimation of the squared operator norm.

Every operator knows its input and output shape, applies the affine map
``forward`` and the bias-free transpose ``adjoint``; the adjoint identity
<A x, u> = <x, A^T u> is the contract every kind has to satisfy.
"""

import numpy as np

from ._conv import conv2d_adjoint, conv2d_forward
from .rng import Prng


def _check_shape(name, x, shape):
    if tuple(x.shape) != tuple(shape):
        raise ValueError(f"{name} expects shape {tuple(shape)}, got {tuple(x.shape)}")


class DenseAffine:
    """x -> W x + b for a 2-D weight matrix and 1-D bias."""

    kind_tag = 0

    def __init__(self, weight, bias=None, input_shape=None):
        self.weight = np.ascontiguousarray(weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ValueError(f"weight must be 2-D, got shape {self.weight.shape}")
        m, n = self.weight.shape
        self.bias = (
            np.zeros(m)
            if bias is None
            else np.ascontiguousarray(bias, dtype=np.float64)
        )
        if self.bias.shape != (m,):
            raise ValueError(f"bias must have shape ({m},), got {self.bias.shape}")
        self.input_shape = (n,) if input_shape is None else tuple(input_shape)
        if int(np.prod(self.input_shape)) != n:
            raise ValueError(
                f"input_shape {self.input_shape} does not hold {n} entries"
            )
        self.output_shape = (m,)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        _check_shape("forward", x, self.input_shape)
        return self.weight @ x.ravel() + self.bias

    def adjoint(self, u):
        u = np.asarray(u, dtype=np.float64)
        _check_shape("adjoint", u, self.output_shape)
        return (self.weight.T @ u).reshape(self.input_shape)

    def __repr__(self):
        return f"DenseAffine({self.weight.shape[0]}x{self.weight.shape[1]})"


def conv_output_hw(h, w, kh, kw, stride, padding):
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"kernel {kh}x{kw} does not fit a {h}x{w} input")
    return ho, wo


class Conv2d:
    """Strided 2-D convolution with zero padding, channels-first layout.

    Kernel shape is (out_channels, in_channels, kh, kw); inputs are
    (in_channels, H, W).  Padding defaults to 1 on each border, which
    halves the spatial dimension for 4x4 kernels with stride 2.
    """

    kind_tag = 1

    def __init__(self, kernel, input_hw, stride=1, padding=1, bias=None):
        self.kernel = np.ascontiguousarray(kernel, dtype=np.float64)
        if self.kernel.ndim != 4:
            raise ValueError(f"kernel must be 4-D, got shape {self.kernel.shape}")
        cout, cin, kh, kw = self.kernel.shape
        self.stride = int(stride)
        self.padding = int(padding)
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")
        h, w = input_hw
        ho, wo = conv_output_hw(h, w, kh, kw, self.stride, self.padding)
        self.bias = (
            np.zeros(cout)
            if bias is None
            else np.ascontiguousarray(bias, dtype=np.float64)
        )
        if self.bias.shape != (cout,):
            raise ValueError(f"bias must have shape ({cout},), got {self.bias.shape}")
        self.input_shape = (cin, h, w)
        self.output_shape = (cout, ho, wo)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        _check_shape("forward", x, self.input_shape)
        out = conv2d_forward(x, self.kernel, self.stride, self.padding)
        return out + self.bias[:, None, None]

    def adjoint(self, u):
        u = np.asarray(u, dtype=np.float64)
        _check_shape("adjoint", u, self.output_shape)
        _, h, w = self.input_shape
        return conv2d_adjoint(u, self.kernel, self.stride, self.padding, h, w)

    def __repr__(self):
        cout, cin, kh, kw = self.kernel.shape
        return f"Conv2d({cin}->{cout}, {kh}x{kw}, stride={self.stride})"


class ConvTranspose2d:
    """Transpose of a strided convolution (the upsampling direction).

    Kernel shape is (in_channels, out_channels, kh, kw); the output
    spatial size inverts the convolution shape formula.
    """

    kind_tag = 2

    def __init__(self, kernel, input_hw, stride=1, padding=1, bias=None):
        self.kernel = np.ascontiguousarray(kernel, dtype=np.float64)
        if self.kernel.ndim != 4:
            raise ValueError(f"kernel must be 4-D, got shape {self.kernel.shape}")
        cin, cout, kh, kw = self.kernel.shape
        self.stride = int(stride)
        self.padding = int(padding)
        if self.stride < 1 or self.padding < 0:
            raise ValueError("stride must be >= 1 and padding >= 0")
        h, w = input_hw
        ho = (h - 1) * self.stride - 2 * self.padding + kh
        wo = (w - 1) * self.stride - 2 * self.padding + kw
        if ho < 1 or wo < 1:
            raise ValueError(f"kernel {kh}x{kw} does not fit a {h}x{w} input")
        self.bias = (
            np.zeros(cout)
            if bias is None
            else np.ascontiguousarray(bias, dtype=np.float64)
        )
        if self.bias.shape != (cout,):
            raise ValueError(f"bias must have shape ({cout},), got {self.bias.shape}")
        self.input_shape = (cin, h, w)
        self.output_shape = (cout, ho, wo)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        _check_shape("forward", x, self.input_shape)
        _, ho, wo = self.output_shape
        out = conv2d_adjoint(x, self.kernel, self.stride, self.padding, ho, wo)
        return out + self.bias[:, None, None]

    def adjoint(self, u):
        u = np.asarray(u, dtype=np.float64)
        _check_shape("adjoint", u, self.output_shape)
        return conv2d_forward(u, self.kernel, self.stride, self.padding)

    def __repr__(self):
        cin, cout, kh, kw = self.kernel.shape
        return f"ConvTranspose2d({cin}->{cout}, {kh}x{kw}, stride={self.stride})"


def operator_norm_sq(op, iters: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of the squared spectral norm of the
    linearisation (bias removed).

    The returned Rayleigh quotient is monotone non-decreasing in ``iters``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = Prng(seed)
    shift = op.forward(np.zeros(op.input_shape))
    v = rng.uniform(op.input_shape) - 0.5
    nv = float(np.linalg.norm(v))
    if nv == 0.0:  # cannot happen for the fixed generator, but stay safe
        v = np.ones(op.input_shape)
        nv = float(np.linalg.norm(v))
    v = v / nv
    est = 0.0
    for _ in range(iters):
        w = op.forward(v) - shift
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        est = nw * nw
        v = op.adjoint(w)
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return est
        v = v / nv
    return est
