"""Comparison controllers sharing the arm, camera, and estimator plumbing.

Three schemes:

* RBF+PID: the same column-network Jacobian estimator, but updated by a
  continuous-time correlation law, with a plain proportional pseudo-inverse
  velocity command u = -k pinv(J) dx where dx = measured - desired feature.
* UKF+MFAC: UKF Jacobian estimate feeding a one-step model-free increment
  r_k = r_{k-1} + (lam I + J^T J)^-1 J^T e, driven by the previous tick's
  error measured desired-minus-actual (the sign the increment law expects).
* UKF+MPC: UKF estimate feeding a closed-form horizon-weighted increment
  r_k = r_{k-1} + pinv(a J + pinv(J^T) Q) (b - c) e with scalar coefficients
  a, b, c from the horizon length and two forgetting factors.

The increment laws drive joint position targets; the harness converts the
increment to a velocity command by dividing by the sample time.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .estimator import predict_jacobian, ukf_update
from .rbf import RbfNetworkModel, activations

log = logging.getLogger(__name__)

PINV_SIGMA_MIN = 1e-3
PINV_DAMPING = 1e-4


def damped_pinv(mat, sigma_min=PINV_SIGMA_MIN, damping=PINV_DAMPING):
    """Moore-Penrose pseudo-inverse with Tikhonov damping near singularity."""
    u, s, vt = np.linalg.svd(np.asarray(mat, dtype=float), full_matrices=False)
    if s[-1] < sigma_min:
        log.debug("damped pseudo-inverse engaged (sigma_min=%.2e)", s[-1])
        inv_s = s / (s**2 + damping)
    else:
        inv_s = 1.0 / s
    return vt.T @ np.diag(inv_s) @ u.T


# --- RBF + PID ----------------------------------------------------------------

@dataclass(frozen=True)
class RbfPidParams:
    """Proportional gain and the two correlation-update gains, all positive."""

    gain: float = 2.0
    n2: float = 1.0
    n3: float = 1.0

    def __post_init__(self):
        if self.gain <= 0 or self.n2 <= 0 or self.n3 <= 0:
            raise ValueError("rbf+pid gains must be positive")


def rbf_pid_tick(models, q, tracking_error, est_residual, params, dt):
    """One RBF+PID tick: command plus correlation update of the column nets.

    tracking_error is measured minus desired feature; est_residual is the
    feature-rate prediction residual of the estimator (zero when unknown).
    Per network i the weights move by dt * u_i * (n2 est_residual + n3
    tracking_error) theta_i^T, correlating the command with both error
    signals. Returns (velocity command, updated models, vdot monitor) where
    the monitor -gain n2 ||dx||^2 - n3 ||res||^2 is the decrease rate the
    design aims for (non-positive by construction).
    """
    dx = np.asarray(tracking_error, dtype=float)
    res = np.asarray(est_residual, dtype=float)
    jac = predict_jacobian(models, q)
    u = -params.gain * damped_pinv(jac) @ dx
    blended = params.n2 * res + params.n3 * dx
    updated = []
    for i, model in enumerate(models):
        theta = activations(model.layer, np.asarray(q, dtype=float))
        w = model.weights + dt * u[i] * np.outer(blended, theta)
        updated.append(RbfNetworkModel(layer=model.layer, weights=w))
    vdot = -params.gain * params.n2 * float(dx @ dx) - params.n3 * float(res @ res)
    return u, updated, vdot


class RbfPidController:
    """Closed-loop wrapper owning the network state and the residual memory."""

    def __init__(self, models, params=None, dt=0.05):
        self.models = list(models)
        self.params = params or RbfPidParams()
        self.dt = dt
        self.last_vdot = 0.0

    def tick(self, q, y, y_des, transition=None):
        if transition is not None:
            du, dy = transition
            est_residual = (np.asarray(dy) - predict_jacobian(self.models, q) @ np.asarray(du)) / self.dt
        else:
            est_residual = np.zeros(3)
        u, self.models, self.last_vdot = rbf_pid_tick(
            self.models, q, np.asarray(y) - np.asarray(y_des), est_residual,
            self.params, self.dt)
        return u


# --- UKF + MFAC ----------------------------------------------------------------

@dataclass(frozen=True)
class MfacParams:
    """Input-magnitude weight; must be positive so the solve is well posed."""

    lam: float = 0.5

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")


def mfac_tick(jac, r_prev, error, params):
    """Position-target increment r = r_prev + (lam I + J^T J)^-1 J^T e.

    `error` is the error the increment should cancel (desired minus measured
    feature); lam > 0 keeps the normal matrix invertible and shrinks the
    increment as it grows.
    """
    jac = np.asarray(jac, dtype=float)
    rhs = jac.T @ np.asarray(error, dtype=float)
    gram = params.lam * np.eye(jac.shape[1]) + jac.T @ jac
    return np.asarray(r_prev, dtype=float) + np.linalg.solve(gram, rhs)


class UkfMfacController:
    """UKF Jacobian estimate driving the one-step increment with a one-tick
    error delay, converted to a velocity command by the harness sample time."""

    def __init__(self, ukf_state, params=None, dt=0.05):
        self.state = ukf_state
        self.params = params or MfacParams()
        self.dt = dt
        self._prev_error = None

    def tick(self, q, y, y_des, transition=None):
        if transition is not None:
            du, dy = transition
            self.state = ukf_update(self.state, du, dy)
        if self._prev_error is None:
            u = np.zeros(6)
        else:
            r_prev = np.asarray(q, dtype=float)
            r_new = mfac_tick(self.state.jacobian(), r_prev, self._prev_error, self.params)
            u = (r_new - r_prev) / self.dt
        self._prev_error = np.asarray(y_des) - np.asarray(y)
        return u


# --- UKF + MPC ------------------------------------------------------------------

@dataclass(frozen=True)
class MpcParams:
    """Horizon length, forgetting factor in (0, 1), decay rate, command weight."""

    horizon: int = 2
    alpha_star: float = 0.5
    rho: float = 0.1
    command_weight: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(6))

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 < self.alpha_star < 1.0:
            raise ValueError(
                f"alpha_star must lie in (0, 1); 1 would zero the log in the coefficients, got {self.alpha_star}"
            )
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        w = np.asarray(self.command_weight, dtype=float)
        if w.shape != (6, 6) or np.max(np.abs(w - w.T)) > 1e-12:
            raise ValueError("command_weight must be symmetric 6x6")
        try:
            np.linalg.cholesky(w)
        except np.linalg.LinAlgError as exc:
            raise ValueError("command_weight must be positive definite") from exc
        object.__setattr__(self, "command_weight", w)


def _horizon_coefficient(h, base):
    """(h base^h ln(base) - base^h + 1) / ln(base)^2."""
    lb = np.log(base)
    return (h * base**h * lb - base**h + 1.0) / lb**2


def mpc_coeffs(params):
    """Scalar coefficients (a, b, c) of the closed-form horizon increment.

    b uses the forgetting factor alone, c the factor multiplied by exp(-rho),
    and a = (H^2 alpha^H - 2b) / ln(alpha).
    """
    h = params.horizon
    alpha = params.alpha_star
    beta = np.exp(-params.rho)
    b = _horizon_coefficient(h, alpha)
    c = _horizon_coefficient(h, alpha * beta)
    a = (h**2 * alpha**h - 2.0 * b) / np.log(alpha)
    return a, b, c


def mpc_tick(jac, r_prev, error, params):
    """Position-target increment r = r_prev + pinv(a J + pinv(J^T) Q) (b - c) e.

    `error` is desired minus measured feature. Both pseudo-inverses switch to
    the damped form near singularity.
    """
    jac = np.asarray(jac, dtype=float)
    a, b, c = mpc_coeffs(params)
    inner = a * jac + damped_pinv(jac.T) @ params.command_weight
    increment = damped_pinv(inner) @ ((b - c) * np.asarray(error, dtype=float))
    return np.asarray(r_prev, dtype=float) + increment


class UkfMpcController:
    """UKF Jacobian estimate driving the horizon-weighted position increment."""

    def __init__(self, ukf_state, params=None, dt=0.05):
        self.state = ukf_state
        self.params = params or MpcParams()
        self.dt = dt

    def tick(self, q, y, y_des, transition=None):
        if transition is not None:
            du, dy = transition
            self.state = ukf_update(self.state, du, dy)
        r_prev = np.asarray(q, dtype=float)
        error = np.asarray(y_des) - np.asarray(y)
        r_new = mpc_tick(self.state.jacobian(), r_prev, error, self.params)
        return (r_new - r_prev) / self.dt
