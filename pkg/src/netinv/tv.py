"""Discrete isotropic total variation on 2-D images.

Forward-difference gradient with zero rows/columns at the image border,
its negative transpose as the divergence, the (2,1) seminorm, and the
pixel-wise projection onto the dual unit ball.
"""

import numpy as np

#: upper bound for the squared operator norm of the discrete gradient
GRAD_NORM_SQ_BOUND = 8.0


def grad_image(x):
    """Forward differences of an H x W image, returned as an H x W x 2 field."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {x.shape}")
    h, w = x.shape
    g = np.zeros((h, w, 2))
    g[: h - 1, :, 0] = x[1:, :] - x[: h - 1, :]
    g[:, : w - 1, 1] = x[:, 1:] - x[:, : w - 1]
    return g


def div_field(z):
    """Discrete divergence, defined as the negative transpose of grad_image."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3 or z.shape[2] != 2:
        raise ValueError(f"expected an H x W x 2 field, got shape {z.shape}")
    h, w = z.shape[:2]
    out = np.zeros((h, w))
    out[: h - 1, :] += z[: h - 1, :, 0]
    out[1:, :] -= z[: h - 1, :, 0]
    out[:, : w - 1] += z[:, : w - 1, 1]
    out[:, 1:] -= z[:, : w - 1, 1]
    return out


def tv_norm(x) -> float:
    """Sum of Euclidean norms of the pixel-wise image gradients."""
    g = grad_image(x)
    return float(np.sum(np.sqrt(g[:, :, 0] ** 2 + g[:, :, 1] ** 2)))


def project_dual_ball(z):
    """Scale each pixel's 2-vector back onto the Euclidean unit ball."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3 or z.shape[2] != 2:
        raise ValueError(f"expected an H x W x 2 field, got shape {z.shape}")
    norms = np.sqrt(z[:, :, 0] ** 2 + z[:, :, 1] ** 2)
    return z / np.maximum(1.0, norms)[:, :, None]
