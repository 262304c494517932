"""Pure-numpy strided 2-D convolution kernels (fallback backend).

Correlation convention, channels-first layout.  All three routines share
the index map  out[c, oh, ow] = sum_{i,p,q} k[c, i, p, q] * x[i, oh*s+p-pad, ow*s+q-pad].
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x, kh, kw, stride, pad):
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return win[:, ::stride, ::stride]


def conv2d_forward(x, k, stride, pad):
    cin, h, w = x.shape
    cout, cin_k, kh, kw = k.shape
    if cin_k != cin:
        raise ValueError(f"kernel expects {cin_k} input channels, got {cin}")
    win = _windows(x, kh, kw, stride, pad)
    return np.einsum("cipq,ihwpq->chw", k, win, optimize=True)


def conv2d_adjoint(u, k, stride, pad, h, w):
    cout, ho, wo = u.shape
    cout_k, cin, kh, kw = k.shape
    if cout_k != cout:
        raise ValueError(f"kernel expects {cout_k} output channels, got {cout}")
    cols = np.einsum("chw,cipq->ihwpq", u, k, optimize=True)
    xp = np.zeros((cin, h + 2 * pad, w + 2 * pad))
    for p in range(kh):
        for q in range(kw):
            xp[:, p : p + ho * stride : stride, q : q + wo * stride : stride] += cols[
                :, :, :, p, q
            ]
    return xp[:, pad : pad + h, pad : pad + w]


def conv2d_kernel_grad(x, u, stride, pad, kh, kw):
    win = _windows(x, kh, kw, stride, pad)
    return np.einsum("chw,ihwpq->cipq", u, win, optimize=True)
