"""Bregman losses coupling post-activations to pre-activations, plus the
divergences used in the convergence-rate analysis."""

import math

import numpy as np

INF = float("inf")


class SubgradientViolation(ValueError):
    """Raised when supplied vectors cannot be subgradients of a convex R."""


class BregmanLoss:
    """Loss that vanishes exactly when x equals the activation of z.

    For a penalty psi with activation sigma = prox_psi, the value is

        1/2 ||x||^2 + psi(x) + (1/2 ||.||^2 + psi)*(z) - <x, z>

    which is non-negative, convex in z for fixed x, differentiable in z
    with gradient sigma(z) - x, and bounds 1/2 ||sigma(z) - x||^2 from above.
    """

    def __init__(self, penalty):
        self.penalty = penalty

    def loss(self, x, z) -> float:
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        if x.shape != z.shape:
            raise ValueError(f"shape mismatch: x {x.shape} vs z {z.shape}")
        psi_x = self.penalty.eval(x)
        if psi_x == INF:
            return INF
        xr, zr = x.ravel(), z.ravel()
        return (
            0.5 * float(np.dot(xr, xr))
            + psi_x
            + self.penalty.conjugate_shifted(z)
            - float(np.dot(xr, zr))
        )

    def grad_z(self, x, z):
        """Gradient of the loss in its second argument: sigma(z) - x."""
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        if x.shape != z.shape:
            raise ValueError(f"shape mismatch: x {x.shape} vs z {z.shape}")
        return self.penalty.prox(z) - x


def burbea_rao(penalty, x, y) -> float:
    """Jensen-gap divergence 1/2 (psi(x) + psi(y) - 2 psi((x+y)/2)).

    Infinite as soon as either argument is infeasible for an indicator
    penalty; always symmetric and non-negative by convexity.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    fx = penalty.eval(x)
    fy = penalty.eval(y)
    if fx == INF or fy == INF:
        return INF
    fm = penalty.eval(0.5 * (x + y))
    return 0.5 * (fx + fy - 2.0 * fm)


def symmetric_bregman(grad_x, grad_y, x, y) -> float:
    """Two-sided Bregman distance <x - y, q_x - q_y> for subgradients q.

    The caller supplies the subgradients; a negative result (beyond
    round-off) means they cannot both be subgradients of one convex
    function and is rejected.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    qx = np.asarray(grad_x, dtype=np.float64).ravel()
    qy = np.asarray(grad_y, dtype=np.float64).ravel()
    if not (x.shape == y.shape == qx.shape == qy.shape):
        raise ValueError("all four vectors must share one shape")
    val = float(np.dot(x - y, qx - qy))
    if val < -1e-10:
        raise SubgradientViolation(
            f"symmetric Bregman distance came out negative ({val:.3e}); "
            "the supplied vectors are not subgradients"
        )
    return val


def error_bound_rhs(penalty, delta, alpha, c, v_dag, y_delta) -> float:
    """Right-hand side of the data-error estimate for perceptron inversion.

    Evaluates (1 + c) delta^2 + (alpha^2 / c) ||v||^2 plus twice c times
    the Jensen-gap divergence of y_delta +- (alpha/c) v; infinite when
    those two points leave the penalty's domain.
    """
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if delta < 0.0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    v = np.asarray(v_dag, dtype=np.float64)
    y = np.asarray(y_delta, dtype=np.float64)
    shift = (alpha / c) * v
    jterm = burbea_rao(penalty, y + shift, y - shift)
    vsq = float(np.dot(v.ravel(), v.ravel()))
    return (1.0 + c) * delta**2 + (alpha**2 / c) * vsq + 2.0 * c * jterm


def alpha_schedule(delta, c, v_dag_norm) -> float:
    """Regularisation strength sqrt(c (1 + c)) * delta / ||v||."""
    if v_dag_norm <= 0.0:
        raise ValueError("source element norm must be positive")
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if delta < 0.0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    return math.sqrt(c * (1.0 + c)) * delta / v_dag_norm
