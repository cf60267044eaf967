"""Receding-horizon model-free adaptive controller.

The command is u(k) = M(k) xi(k): xi stacks the newest n_e feature errors
and n_c past commands, and each column of the time-varying mapping matrix M
is the output of one RBF network evaluated at xi. Every tick the controller

  1. rolls the local model y+ = y + J u dt over a short horizon with M and
     the Jacobian estimate frozen,
  2. forms the gradient of the summed squared predicted errors with respect
     to every output weight,
  3. takes one descent step whose size is normalized so the predicted error
     contracts by a factor controlled by a gain in (-2, 0),
  4. emits the clamped command from the updated networks.

Errors are measured minus desired (e = y - y_des). With that convention the
horizon criterion gradient is exactly the positive sum computed in
controller_gradient, and the descent step size is gain * sum||e||^2 / sum G^2,
which is negative for admissible gains. The companion weight-error variation
monitor (2g + g^2) * [sum||e||^2]^2 / sum G^2 is non-positive on the same
admissible range.

All operations are dimension generic (feature dim and command dim inferred
from the inputs); the production loop uses 3-vector features and 6 joints.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .rbf import RbfNetworkModel, activations

DEFAULT_STEP_GAIN = -0.5
DEFAULT_HORIZON = 5
DEFAULT_ERROR_HISTORY = 2
DEFAULT_INPUT_HISTORY = 1
DEFAULT_COMMAND_CLAMP = 1.0
DEFAULT_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class ControllerParams:
    """Adaptation gain in (-2, 0), horizon, history lengths, command clamp."""

    step_gain: float = DEFAULT_STEP_GAIN
    horizon: int = DEFAULT_HORIZON
    error_history: int = DEFAULT_ERROR_HISTORY
    input_history: int = DEFAULT_INPUT_HISTORY
    command_clamp: float = DEFAULT_COMMAND_CLAMP
    denom_floor: float = DEFAULT_DENOM_FLOOR

    def __post_init__(self):
        if not -2.0 < self.step_gain < 0.0:
            raise ValueError(
                f"step_gain must lie in (-2, 0) for the weight error to shrink, got {self.step_gain}"
            )
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.error_history < 1 or self.input_history < 1:
            raise ValueError("history lengths must be >= 1")
        if self.command_clamp <= 0.0:
            raise ValueError("command_clamp must be positive")
        if self.denom_floor <= 0.0:
            raise ValueError("denom_floor must be positive")

    @property
    def variation_coefficient(self):
        """2g + g^2; negative exactly on the admissible gain range."""
        return 2.0 * self.step_gain + self.step_gain**2


def info_dim(feature_dim, command_dim, error_history, input_history):
    return feature_dim * error_history + command_dim * input_history


def build_info_vector(error_history, input_history, n_errors, n_inputs):
    """Stack [e(k); ...; e(k-n_errors+1); u(k-1); ...; u(k-n_inputs)].

    Histories are sequences with the newest entry LAST; missing depth during
    cold start is zero padded. Returns a flat vector, newest error first.
    """
    errors = [np.asarray(e, dtype=float) for e in error_history]
    inputs = [np.asarray(u, dtype=float) for u in input_history]
    if not errors or not inputs:
        raise DimensionError("need at least one error and one input in the histories")
    d_e = errors[-1].shape[0]
    d_u = inputs[-1].shape[0]
    parts = []
    for i in range(n_errors):
        idx = len(errors) - 1 - i
        parts.append(errors[idx] if idx >= 0 else np.zeros(d_e))
    for i in range(n_inputs):
        idx = len(inputs) - 1 - i
        parts.append(inputs[idx] if idx >= 0 else np.zeros(d_u))
    return np.concatenate(parts)


def eval_mapping(nets, xi):
    """Mapping matrix M: column m is network m's output at xi.

    Each network maps the full info vector to one d_u column; the matrix has
    one column per info-vector entry.
    """
    xi = np.asarray(xi, dtype=float)
    if len(nets) != xi.shape[0]:
        raise DimensionError(
            f"need one network per info entry: {len(nets)} nets for xi of dim {xi.shape[0]}"
        )
    cols = []
    cache = {}
    for net in nets:
        key = id(net.layer)
        if key not in cache:
            cache[key] = activations(net.layer, xi)
        cols.append(net.weights @ cache[key])
    return np.column_stack(cols)


def command(mapping, xi, clamp=DEFAULT_COMMAND_CLAMP):
    """Clamped command M xi."""
    u = np.asarray(mapping) @ np.asarray(xi, dtype=float)
    return np.clip(u, -clamp, clamp)


def classical_mapping(jac, kp, error_history, input_history, feedthrough=0.0):
    """Mapping matrix reproducing the classical proportional law.

    The newest-error block is -kp * pinv(J); older error blocks are zero; the
    newest-input block is feedthrough * I (1.0 recovers the historical
    position-increment form, 0.0 the plain velocity law). Useful as a warm
    start target and as the representability check of the classical scheme.
    """
    jac = np.asarray(jac, dtype=float)
    d_y, d_u = jac.shape
    blocks = [-kp * np.linalg.pinv(jac)]
    for _ in range(error_history - 1):
        blocks.append(np.zeros((d_u, d_y)))
    blocks.append(feedthrough * np.eye(d_u))
    for _ in range(input_history - 1):
        blocks.append(np.zeros((d_u, d_u)))
    return np.hstack(blocks)


@dataclass
class HorizonRollout:
    """Predicted quantities over one frozen-horizon rollout.

    errors[t] = predicted e(k+t+1), inputs[t] = u(k+t), infos[t] = xi(k+t),
    activations[t][m] = network m's hidden vector at xi(k+t), all for
    t = 0..horizon-1, with the mapping matrix networks and the Jacobian
    estimate frozen at tick k. dt converts the Jacobian to a per-command
    sensitivity.
    """

    errors: np.ndarray
    inputs: np.ndarray
    infos: np.ndarray
    activations: list
    jac: np.ndarray
    dt: float

    @property
    def horizon(self):
        return self.errors.shape[0]

    def criterion(self):
        """Summed half squared predicted errors."""
        return 0.5 * float(np.sum(self.errors**2))


def rollout(nets, params, error_hist, input_hist, y, y_des_future, jac, dt):
    """Iterate the local model over the horizon with nets and jac frozen.

    y_des_future[t] is the desired feature at step k+t+1; commands inside the
    rollout are NOT clamped so the later gradient is exact for the linear
    chain the update law assumes.
    """
    jac = np.asarray(jac, dtype=float)
    y = np.asarray(y, dtype=float)
    y_des_future = np.atleast_2d(np.asarray(y_des_future, dtype=float))
    if y_des_future.shape[0] < params.horizon:
        raise DimensionError(
            f"need {params.horizon} future desired features, got {y_des_future.shape[0]}"
        )
    errs = list(error_hist)
    ins = list(input_hist)
    pred_errors = np.empty((params.horizon, y.shape[0]))
    pred_inputs = np.empty((params.horizon, jac.shape[1]))
    infos = np.empty((params.horizon, info_dim(y.shape[0], jac.shape[1],
                                               params.error_history, params.input_history)))
    acts = []
    y_pred = y.copy()
    for t in range(params.horizon):
        xi = build_info_vector(errs, ins, params.error_history, params.input_history)
        cache = {}
        step_acts = []
        for net in nets:
            key = id(net.layer)
            if key not in cache:
                cache[key] = activations(net.layer, xi)
            step_acts.append(cache[key])
        mapping = np.column_stack([net.weights @ h for net, h in zip(nets, step_acts)])
        u = mapping @ xi
        y_pred = y_pred + jac @ u * dt
        e_next = y_pred - y_des_future[t]
        pred_errors[t] = e_next
        pred_inputs[t] = u
        infos[t] = xi
        acts.append(step_acts)
        errs.append(e_next)
        ins.append(u)
    return HorizonRollout(errors=pred_errors, inputs=pred_inputs, infos=infos,
                          activations=acts, jac=jac, dt=dt)


def controller_gradient(ro):
    """Per-network weight gradients of the horizon criterion.

    G[m][n, :] = sum_t e(k+t)^T (J dt) xi_m(k+t-1) h_mn(k+t-1), the exact
    gradient of the criterion when each stage error responds only to its own
    preceding command through the frozen local model. Returned as one
    (n_hidden, d_u) array per network.
    """
    sens = ro.jac * ro.dt
    n_nets = ro.infos.shape[1]
    grads = [None] * n_nets
    for t in range(ro.horizon):
        row = ro.errors[t] @ sens  # (d_u,)
        xi = ro.infos[t]
        for m in range(n_nets):
            term = xi[m] * np.outer(ro.activations[t][m], row)
            grads[m] = term if grads[m] is None else grads[m] + term
    return grads


def controller_step_size(grads, ro, params):
    """Adaptive step size gain * sum||e||^2 / sum||G||^2 (<= 0 for admissible gains).

    The normalization makes one descent step contract the predicted error by
    roughly (1 + gain) on the frozen local model; the denominator is floored
    so a converged (all-zero error) tick yields a zero step.
    """
    err_sum = float(np.sum(ro.errors**2))
    if err_sum == 0.0:
        return 0.0
    denom = sum(float(np.sum(g**2)) for g in grads)
    return params.step_gain * err_sum / max(denom, params.denom_floor)


def lyapunov_variation(grads, ro, params):
    """Weight-error variation monitor (2g + g^2) [sum||e||^2]^2 / sum||G||^2.

    Non-positive whenever the gain is admissible and the denominator clears
    the floor; logged per tick by the experiment harness.
    """
    err_sum = float(np.sum(ro.errors**2))
    denom = sum(float(np.sum(g**2)) for g in grads)
    return params.variation_coefficient * err_sum**2 / max(denom, params.denom_floor)


def update_controller(nets, grads, step_size):
    """One weight step W_mn <- W_mn + step_size * G_mn^T per network.

    step_size <= 0 from controller_step_size makes this a descent step on the
    horizon criterion. Returns new networks; the inputs are untouched.
    """
    updated = []
    for net, grad in zip(nets, grads):
        updated.append(RbfNetworkModel(layer=net.layer, weights=net.weights + step_size * grad.T))
    return updated


class RecedingHorizonMfac:
    """Closed-loop wrapper: owns the networks, histories, and per-tick sequence."""

    def __init__(self, nets, params=None, dt=0.05, update_enabled=True):
        self.nets = list(nets)
        self.params = params or ControllerParams()
        self.dt = dt
        self.update_enabled = update_enabled
        self.error_hist = []
        self.input_hist = []
        self.last_step_size = 0.0
        self.last_criterion = float("nan")
        self.last_variation = 0.0

    def reset(self):
        self.error_hist.clear()
        self.input_hist.clear()

    def tick(self, y, e, y_des_future, jac):
        """One control tick: rollout, gradient, weight update, command."""
        p = self.params
        self.error_hist.append(np.asarray(e, dtype=float).copy())
        if not self.input_hist:
            self.input_hist.append(np.zeros(jac.shape[1]))
        ro = rollout(self.nets, p, self.error_hist, self.input_hist,
                     y, y_des_future, jac, self.dt)
        self.last_criterion = ro.criterion()
        if self.update_enabled:
            grads = controller_gradient(ro)
            alpha = controller_step_size(grads, ro, p)
            self.last_variation = lyapunov_variation(grads, ro, p)
            self.nets = update_controller(self.nets, grads, alpha)
            self.last_step_size = alpha
        xi = build_info_vector(self.error_hist, self.input_hist,
                               p.error_history, p.input_history)
        u = command(eval_mapping(self.nets, xi), xi, p.command_clamp)
        self.input_hist.append(u)
        # keep just enough history for the info vector
        depth = max(p.error_history, p.input_history) + 1
        del self.error_hist[:-depth]
        del self.input_hist[:-depth]
        return u
