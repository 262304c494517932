"""Regularisation terms pluggable into the primal-dual solver.

Each regulariser is alpha * R(K x).  Dual-based terms (TV, squared norm,
l1) expose the coupling-operator pieces of the saddle-point iteration in
the scaling where alpha is absorbed into the coupling; prox-based terms
(penalties reused as priors in sequential inversion) expose a primal
proximal step instead.
"""

import numpy as np

from .tv import GRAD_NORM_SQ_BOUND, div_field, grad_image, project_dual_ball, tv_norm


def _as_image(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x
    if x.ndim == 3 and x.shape[0] == 1:
        return x[0]
    raise ValueError(
        f"total variation needs an HxW or 1xHxW argument, got shape {x.shape}"
    )


class TotalVariation:
    """Isotropic total variation of a (single-channel) image."""

    uses_dual = True
    k_norm_sq_bound = GRAD_NORM_SQ_BOUND

    def dual_init(self, x):
        h, w = _as_image(x).shape
        return np.zeros((h, w, 2))

    def value(self, x) -> float:
        return tv_norm(_as_image(x))

    def primal_coupling(self, z, alpha, x_shape):
        term = -alpha * div_field(z)
        return term.reshape(x_shape)

    def dual_update(self, z, x_new, x_old, tau_z, alpha):
        ascent = 2.0 * grad_image(_as_image(x_new)) - grad_image(_as_image(x_old))
        return project_dual_ball(z + tau_z * alpha * ascent)


class SquaredL2:
    """R(x) = 1/2 ||x||^2 (Tikhonov prior)."""

    uses_dual = True
    k_norm_sq_bound = 1.0

    def dual_init(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).ravel()
        return 0.5 * float(np.dot(x, x))

    def primal_coupling(self, z, alpha, x_shape):
        return alpha * z

    def dual_update(self, z, x_new, x_old, tau_z, alpha):
        w = z + tau_z * alpha * (2.0 * x_new - x_old)
        return w / (1.0 + tau_z * alpha)


class L1Norm:
    """R(x) = ||x||_1 (sparsity prior)."""

    uses_dual = True
    k_norm_sq_bound = 1.0

    def dual_init(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def value(self, x) -> float:
        return float(np.sum(np.abs(x)))

    def primal_coupling(self, z, alpha, x_shape):
        return alpha * z

    def dual_update(self, z, x_new, x_old, tau_z, alpha):
        w = z + tau_z * alpha * (2.0 * x_new - x_old)
        return np.clip(w, -1.0, 1.0)


class PenaltyReg:
    """Reuse a proximable penalty as the prior (sequential inversion)."""

    uses_dual = False
    k_norm_sq_bound = 1.0

    def __init__(self, penalty):
        self.penalty = penalty

    def value(self, x) -> float:
        return self.penalty.eval(x)

    def primal_prox(self, v, tau_x, alpha):
        return self.penalty.prox_scaled(v, tau_x * alpha)


_BY_NAME = {"tv": TotalVariation, "l2": SquaredL2, "l1": L1Norm}


def regulariser_by_name(name: str):
    try:
        return _BY_NAME[name.lower()]()
    except KeyError:
        raise ValueError(
            f"unknown regulariser {name!r}; expected one of {sorted(_BY_NAME)}"
        ) from None
