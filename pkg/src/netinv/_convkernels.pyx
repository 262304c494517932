# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled strided 2-D convolution kernels (hot loops of the solvers).

Same correlation convention and channels-first layout as the numpy
fallback in ``_convnp``; see there for the shared index map.
"""

import numpy as np


def conv2d_forward(double[:, :, ::1] x, double[:, :, :, ::1] k, int stride, int pad):
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], w = x.shape[2]
    cdef Py_ssize_t cout = k.shape[0], kh = k.shape[2], kw = k.shape[3]
    if k.shape[1] != cin:
        raise ValueError(
            f"kernel expects {k.shape[1]} input channels, got {cin}"
        )
    cdef Py_ssize_t ho = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - kw) // stride + 1
    out_arr = np.zeros((cout, ho, wo))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, oh, ow, p, q, ih, iw
    cdef double acc
    for c in range(cout):
        for oh in range(ho):
            for ow in range(wo):
                acc = 0.0
                for i in range(cin):
                    for p in range(kh):
                        ih = oh * stride + p - pad
                        if ih < 0 or ih >= h:
                            continue
                        for q in range(kw):
                            iw = ow * stride + q - pad
                            if iw < 0 or iw >= w:
                                continue
                            acc += k[c, i, p, q] * x[i, ih, iw]
                out[c, oh, ow] = acc
    return out_arr


def conv2d_adjoint(double[:, :, ::1] u, double[:, :, :, ::1] k, int stride,
                   int pad, Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t cout = u.shape[0], ho = u.shape[1], wo = u.shape[2]
    cdef Py_ssize_t cin = k.shape[1], kh = k.shape[2], kw = k.shape[3]
    if k.shape[0] != cout:
        raise ValueError(
            f"kernel expects {k.shape[0]} output channels, got {cout}"
        )
    out_arr = np.zeros((cin, h, w))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, oh, ow, p, q, ih, iw
    cdef double uv
    for c in range(cout):
        for oh in range(ho):
            for ow in range(wo):
                uv = u[c, oh, ow]
                if uv == 0.0:
                    continue
                for i in range(cin):
                    for p in range(kh):
                        ih = oh * stride + p - pad
                        if ih < 0 or ih >= h:
                            continue
                        for q in range(kw):
                            iw = ow * stride + q - pad
                            if iw < 0 or iw >= w:
                                continue
                            out[i, ih, iw] += uv * k[c, i, p, q]
    return out_arr


def conv2d_kernel_grad(double[:, :, ::1] x, double[:, :, ::1] u, int stride,
                       int pad, Py_ssize_t kh, Py_ssize_t kw):
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], w = x.shape[2]
    cdef Py_ssize_t cout = u.shape[0], ho = u.shape[1], wo = u.shape[2]
    out_arr = np.zeros((cout, cin, kh, kw))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, oh, ow, p, q, ih, iw
    cdef double uv
    for c in range(cout):
        for oh in range(ho):
            for ow in range(wo):
                uv = u[c, oh, ow]
                if uv == 0.0:
                    continue
                for i in range(cin):
                    for p in range(kh):
                        ih = oh * stride + p - pad
                        if ih < 0 or ih >= h:
                            continue
                        for q in range(kw):
                            iw = ow * stride + q - pad
                            if iw < 0 or iw >= w:
                                continue
                            out[c, i, p, q] += uv * x[i, ih, iw]
    return out_arr
