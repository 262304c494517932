"""Inversion solvers: a generalised primal-dual hybrid gradient method for
single layers, coordinate descent and sequential inversion for deep nets, a
Landweber baseline with discrepancy stopping, and the convergence-rate
verification harness."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bregman import BregmanLoss, alpha_schedule, symmetric_bregman
from .linops import DenseAffine, operator_norm_sq
from .network import Layer, Network
from .penalties import NonNegIndicator
from .regularizers import PenaltyReg, SquaredL2
from .rng import Prng


class DivergenceError(RuntimeError):
    """Solver iterates left the finite range."""

    def __init__(self, iteration):
        super().__init__(f"iterates became non-finite at iteration {iteration}")
        self.iteration = iteration


class ConstructionError(ValueError):
    """A rate-verification problem instance violates its preconditions."""


class RateBoundError(RuntimeError):
    """The guaranteed error estimate failed on a verification row."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []


@dataclass
class PdhgConfig:
    alpha: float
    tau_x: float
    tau_z: float
    max_iters: int = 10000
    stop_tol: float = 1e-5

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.tau_x <= 0 or self.tau_z <= 0:
            raise ValueError("step sizes must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @classmethod
    def for_layer(cls, op, alpha, reg=None, max_iters=10000, stop_tol=1e-5,
                  norm_iters=100):
        """Step sizes 1.99/||W||^2 and 1/(k_bound * alpha) for the given layer.

        The primal step is additionally capped so that the joint scheme
        stays contractive (1/tau_x - tau_z ||alpha K||^2 >= ||W||^2 / 2);
        the cap only binds when alpha is large relative to ||W||^2, where
        the plain 1.99/||W||^2 rule diverges.
        """
        wsq = operator_norm_sq(op, norm_iters)
        bound = getattr(reg, "k_norm_sq_bound", 8.0)
        tau_z = 1.0 / (bound * alpha) if alpha > 0 else 1.0
        if wsq > 0:
            coupling = tau_z * alpha * alpha * bound
            tau_x = min(1.99 / wsq, 0.99 / (0.5 * wsq + coupling))
        else:
            tau_x = 1.0
        return cls(alpha, tau_x, tau_z, max_iters, stop_tol)


@dataclass
class SolveReport:
    iterations: int
    final_objective: float
    residual_history: list = field(default_factory=list)
    stop_reason: str = "max_iters"
    elapsed_seconds: float = 0.0


def _sqnorm(a):
    a = np.asarray(a, dtype=np.float64).ravel()
    return float(np.dot(a, a))


def _pdhg_core(layer, y_delta, reg, cfg, x0=None, z0=None):
    """One PDHG run; returns (x, dual, report) so callers can warm start."""
    op, pen = layer.op, layer.penalty
    y = np.asarray(y_delta, dtype=np.float64)
    if tuple(y.shape) != tuple(op.output_shape):
        raise ValueError(
            f"data has shape {y.shape}, operator produces {tuple(op.output_shape)}"
        )
    x = (
        np.zeros(op.input_shape)
        if x0 is None
        else np.array(x0, dtype=np.float64, copy=True)
    )
    if tuple(x.shape) != tuple(op.input_shape):
        raise ValueError(
            f"start has shape {x.shape}, operator expects {tuple(op.input_shape)}"
        )
    z = None
    if reg.uses_dual:
        z = reg.dual_init(x) if z0 is None else np.array(z0, dtype=np.float64)
    history = []
    reason = "max_iters"
    start = time.perf_counter()
    for k in range(cfg.max_iters):
        with np.errstate(over="ignore", invalid="ignore"):
            grad = op.adjoint(pen.prox(op.forward(x)) - y)
            if reg.uses_dual:
                x_new = x - cfg.tau_x * (
                    grad + reg.primal_coupling(z, cfg.alpha, x.shape)
                )
                if not np.all(np.isfinite(x_new)):
                    raise DivergenceError(k)
                z_new = reg.dual_update(z, x_new, x, cfg.tau_z, cfg.alpha)
                if not np.all(np.isfinite(z_new)):
                    raise DivergenceError(k)
                change = math.sqrt(_sqnorm(x_new - x) + _sqnorm(z_new - z))
            else:
                x_new = reg.primal_prox(x - cfg.tau_x * grad, cfg.tau_x, cfg.alpha)
                if not np.all(np.isfinite(x_new)):
                    raise DivergenceError(k)
                z_new = None
                change = math.sqrt(_sqnorm(x_new - x))
        history.append(change)
        x = x_new
        z = z_new
        if change < cfg.stop_tol:
            reason = "tolerance"
            break
    objective = BregmanLoss(pen).loss(y, op.forward(x))
    if cfg.alpha > 0:
        objective += cfg.alpha * reg.value(x)
    report = SolveReport(
        iterations=len(history),
        final_objective=objective,
        residual_history=history,
        stop_reason=reason,
        elapsed_seconds=time.perf_counter() - start,
    )
    return x, z, report


def pdhg_invert_perceptron(layer, y_delta, reg, cfg, x0=None, z0=None):
    """Invert one layer: minimise the Bregman data term plus alpha * R.

    Alternates an explicit descent step in the input with an ascent step
    in the regulariser's dual variable; stops when the joint iterate
    change drops below ``cfg.stop_tol``.
    """
    x, _, report = _pdhg_core(layer, y_delta, reg, cfg, x0=x0, z0=z0)
    return x, report


def landweber_invert(layer, y_delta, delta, tau_disc=1.0, step=None,
                     max_iters=10000, x0=None):
    """Gradient descent on the data term with discrepancy-principle stopping.

    Iterates until ||sigma(W x + b) - y|| <= tau_disc * delta or the
    iteration budget runs out.
    """
    op, pen = layer.op, layer.penalty
    y = np.asarray(y_delta, dtype=np.float64)
    if tuple(y.shape) != tuple(op.output_shape):
        raise ValueError(
            f"data has shape {y.shape}, operator produces {tuple(op.output_shape)}"
        )
    if delta < 0 or tau_disc <= 0:
        raise ValueError("delta must be >= 0 and tau_disc > 0")
    if step is None:
        step = 1.0 / operator_norm_sq(op)
    x = (
        np.zeros(op.input_shape)
        if x0 is None
        else np.array(x0, dtype=np.float64, copy=True)
    )
    start = time.perf_counter()
    residual = pen.prox(op.forward(x)) - y
    res_norm = math.sqrt(_sqnorm(residual))
    history = []
    while res_norm > tau_disc * delta and len(history) < max_iters:
        x = x - step * op.adjoint(residual)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(len(history))
        residual = pen.prox(op.forward(x)) - y
        res_norm = math.sqrt(_sqnorm(residual))
        history.append(res_norm)
    reason = "discrepancy" if res_norm <= tau_disc * delta else "max_iters"
    report = SolveReport(
        iterations=len(history),
        final_objective=BregmanLoss(pen).loss(y, op.forward(x)),
        residual_history=history,
        stop_reason=reason,
        elapsed_seconds=time.perf_counter() - start,
    )
    return x, report


def lifted_objective(net, x, aux, y_delta, reg, alpha):
    """Sum of per-layer Bregman couplings plus the input regulariser."""
    states = [x] + list(aux) + [np.asarray(y_delta, dtype=np.float64)]
    total = alpha * reg.value(x) if alpha > 0 else 0.0
    for i, layer in enumerate(net.layers):
        upstream = np.reshape(states[i], layer.op.input_shape)
        total += BregmanLoss(layer.penalty).loss(
            np.reshape(states[i + 1], layer.op.output_shape),
            layer.op.forward(upstream),
        )
    return total


def coordinate_descent_invert(net, y_delta, reg, alpha, outer_iters=100,
                              inner_iters=50, stop_tol=0.0, tau_aux=None,
                              x0=None, aux0=None, inner_stop_tol=1e-7,
                              norm_iters=100):
    """Block-wise minimisation of the lifted inversion objective.

    Per sweep the input block is updated by a capped warm-started PDHG run
    and every auxiliary state by one proximal gradient step; the lifted
    objective is non-increasing across sweeps.

    Returns (input estimate, auxiliary states, report); the report's
    residual history holds the objective value after each sweep.
    """
    layers = net.layers
    L = len(layers)
    if L < 2:
        raise ValueError("coordinate descent expects a multi-layer network")
    x = (
        np.zeros(layers[0].op.input_shape)
        if x0 is None
        else np.array(x0, dtype=np.float64, copy=True)
    )
    if aux0 is None:
        aux = [s.copy() for s in net.hidden_states(x)[: L - 1]]
    else:
        aux = [np.array(a, dtype=np.float64, copy=True) for a in aux0]
        if len(aux) != L - 1:
            raise ValueError(f"expected {L - 1} auxiliary states, got {len(aux)}")
    if tau_aux is None:
        tau_aux = [
            1.99 / max(operator_norm_sq(layers[j + 1].op, norm_iters), 1e-300)
            for j in range(L - 1)
        ]
    inner_cfg = PdhgConfig.for_layer(
        layers[0].op, alpha, reg, max_iters=inner_iters,
        stop_tol=inner_stop_tol, norm_iters=norm_iters,
    )
    y = np.asarray(y_delta, dtype=np.float64)
    loss_first = BregmanLoss(layers[0].penalty)
    z = None
    objective = lifted_objective(net, x, aux, y, reg, alpha)
    history = []
    reason = "max_iters"
    start = time.perf_counter()
    for sweep in range(outer_iters):
        # input block: warm-started inner PDHG against the first auxiliary
        # state; keep the previous iterate if the inner run did not descend
        target = np.reshape(aux[0], layers[0].op.output_shape)
        before = loss_first.loss(target, layers[0].op.forward(x))
        if alpha > 0:
            before += alpha * reg.value(x)
        x_cand, z_cand, _ = _pdhg_core(
            layers[0], target, reg, inner_cfg, x0=x, z0=z
        )
        after = loss_first.loss(target, layers[0].op.forward(x_cand))
        if alpha > 0:
            after += alpha * reg.value(x_cand)
        if after <= before:
            x, z = x_cand, z_cand
        # auxiliary blocks: one proximal gradient step each
        for j in range(L - 1):
            nxt = layers[j + 1]
            x_next = (
                np.reshape(aux[j + 1], nxt.op.output_shape)
                if j + 1 < L - 1
                else np.reshape(y, nxt.op.output_shape)
            )
            prev_state = x if j == 0 else aux[j - 1]
            f_prev = layers[j].op.forward(
                np.reshape(prev_state, layers[j].op.input_shape)
            )
            state = np.reshape(aux[j], nxt.op.input_shape)
            smooth_grad = nxt.op.adjoint(
                nxt.penalty.prox(nxt.op.forward(state)) - x_next
            )
            t = tau_aux[j]
            v = (state - t * (smooth_grad - np.reshape(f_prev, state.shape))) / (
                1.0 + t
            )
            aux[j] = layers[j].penalty.prox_scaled(v, t / (1.0 + t)).reshape(
                aux[j].shape
            )
        new_objective = lifted_objective(net, x, aux, y, reg, alpha)
        if not math.isfinite(new_objective):
            raise DivergenceError(sweep)
        history.append(new_objective)
        decrease = objective - new_objective
        objective = new_objective
        if stop_tol > 0 and 0 <= decrease < stop_tol:
            reason = "tolerance"
            break
    report = SolveReport(
        iterations=len(history),
        final_objective=objective,
        residual_history=history,
        stop_reason=reason,
        elapsed_seconds=time.perf_counter() - start,
    )
    return x, aux, report


def sequential_invert(net, y_delta, alphas, reg_last, max_iters=10000,
                      stop_tol=1e-5, norm_iters=100):
    """Invert layer by layer from the output back to the input.

    Stage l solves a single-layer problem with the previous stage's
    estimate as data; the prior for intermediate stages is the penalty of
    the layer below, the input stage uses ``reg_last``.
    """
    layers = net.layers
    L = len(layers)
    if len(alphas) != L:
        raise ValueError(f"expected {L} regularisation weights, got {len(alphas)}")
    data = np.asarray(y_delta, dtype=np.float64)
    iterations = 0
    residuals = []
    elapsed = 0.0
    report = None
    for i in reversed(range(L)):
        layer = layers[i]
        reg = reg_last if i == 0 else PenaltyReg(layers[i - 1].penalty)
        cfg = PdhgConfig.for_layer(
            layer.op, alphas[i], reg, max_iters=max_iters,
            stop_tol=stop_tol, norm_iters=norm_iters,
        )
        data, report = pdhg_invert_perceptron(
            layer, np.reshape(data, layer.op.output_shape), reg, cfg
        )
        iterations += report.iterations
        residuals.extend(report.residual_history)
        elapsed += report.elapsed_seconds
    merged = SolveReport(
        iterations=iterations,
        final_objective=report.final_objective,
        residual_history=residuals,
        stop_reason=report.stop_reason,
        elapsed_seconds=elapsed,
    )
    return data, merged


# ---------------------------------------------------------------------------
# convergence-rate verification

@dataclass
class RateRow:
    delta: float
    alpha: float
    d_sym: float
    bound: float


def make_rate_problem(n_out=8, n_in=32, seed=0):
    """Seeded ReLU layer plus source element satisfying the rate harness
    preconditions: x = W^T v lies in the row space and the clean
    pre-activation is strictly positive."""
    rng = Prng(seed)
    weight = rng.uniform_signed(1.0 / math.sqrt(n_in), (n_out, n_in))
    v_dag = rng.uniform_signed(1.0, (n_out,))
    x_dag = weight.T @ v_dag
    y_star = 1.0 + rng.uniform((n_out,))
    bias = y_star - weight @ x_dag
    layer = Layer(DenseAffine(weight, bias), NonNegIndicator())
    return layer, v_dag


def rate_experiment(layer, v_dag, c, deltas, seed=0, max_iters=200000,
                    stop_tol=1e-12, norm_iters=200):
    """Verify the noise-to-error estimate on a ReLU layer row by row.

    For each noise level delta the data is perturbed so that the Bregman
    discrepancy stays below delta^2, the regularisation weight follows the
    a-priori schedule, and the squared-norm prior makes the symmetric
    Bregman distance to the true input computable as a plain squared
    distance.  Raises RateBoundError when any row violates
    d_sym <= 2 sqrt((1+c)/c) ||v|| delta.
    """
    if not isinstance(layer.penalty, NonNegIndicator):
        raise ConstructionError("the rate harness is built around ReLU layers")
    if not 0.0 < c <= 1.0:
        raise ConstructionError(f"c must lie in (0, 1], got {c}")
    op = layer.op
    v = np.asarray(v_dag, dtype=np.float64)
    v_norm = math.sqrt(_sqnorm(v))
    if v_norm == 0.0:
        raise ConstructionError("source element must be non-zero")
    x_dag = op.adjoint(v)
    z_dag = op.forward(x_dag)
    if np.min(z_dag) < 0:
        raise ConstructionError(
            "clean pre-activation W x + b must be non-negative"
        )
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas):
        raise ConstructionError("noise levels must be positive (zero excluded)")
    rng = Prng(seed)
    loss_fn = BregmanLoss(layer.penalty)
    wsq = operator_norm_sq(op, norm_iters)
    rows = []
    for delta in deltas:
        eta = rng.normal(z_dag.shape)
        eta *= math.sqrt(2.0) * 0.99 * delta / math.sqrt(_sqnorm(eta))
        y_d = np.maximum(0.0, z_dag + eta)
        realized = loss_fn.loss(y_d, z_dag)
        if realized > delta**2:
            raise ConstructionError(
                f"realised discrepancy {realized:.3e} exceeds delta^2 at "
                f"delta={delta:g}"
            )
        a = alpha_schedule(delta, c, v_norm)
        if np.any(y_d - (a / c) * np.abs(v) < 0):
            raise ConstructionError(
                f"Jensen-gap term does not vanish at delta={delta:g}"
            )
        if np.max(np.abs(v)) / v_norm > math.sqrt(c / (1.0 + c)) * np.max(
            np.abs(y_d)
        ) / delta:
            raise ConstructionError(
                f"source element sup-norm condition fails at delta={delta:g}"
            )
        tau_z = 1.0 / a
        cfg = PdhgConfig(
            alpha=a,
            tau_x=min(1.99 / wsq, 0.99 / (0.5 * wsq + a)),
            tau_z=tau_z,
            max_iters=max_iters,
            stop_tol=stop_tol,
        )
        x_a, _ = pdhg_invert_perceptron(layer, y_d, SquaredL2(), cfg)
        # gradient of the squared-norm prior is the identity
        d_sym = symmetric_bregman(x_a, x_dag, x_a, x_dag)
        bound = 2.0 * math.sqrt((1.0 + c) / c) * v_norm * delta
        rows.append(RateRow(delta=delta, alpha=a, d_sym=d_sym, bound=bound))
    bad = [r for r in rows if r.d_sym > r.bound]
    if bad:
        detail = ", ".join(
            f"delta={r.delta:g}: d_sym={r.d_sym:.6e} > bound={r.bound:.6e}"
            for r in bad
        )
        raise RateBoundError(f"error estimate violated on {len(bad)} row(s): "
                             f"{detail}", rows=rows)
    return rows
