"""Online hand-eye Jacobian estimation.

Six RBF networks map the joint vector to the six 3-vector columns of the
camera-frame Jacobian. Their output weights are pre-trained offline and then
updated every tick from a sliding window of (joint increment, feature
increment) pairs: the update descends a windowed squared prediction residual
with an adaptive step size whose gain must stay in (0, 2) for the weight
error to shrink.

A UKF over the 18 stacked Jacobian entries (random-walk process, linear
measurement dy = J du) is provided for the comparison controllers.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CovarianceError, DimensionError, WindowUnderfullError
from .rbf import RbfNetworkModel, activations, fit_offline, forward, TrainingSet

N_COLUMNS = 6
FEATURE_DIM = 3
DEFAULT_STEP_GAIN = 1.0
DEFAULT_WINDOW = 5
DEFAULT_DENOM_FLOOR = 1e-8


@dataclass(frozen=True)
class EstimatorParams:
    """Update-law knobs: step gain in (0, 2), window length, denominator floor."""

    step_gain: float = DEFAULT_STEP_GAIN
    window: int = DEFAULT_WINDOW
    denom_floor: float = DEFAULT_DENOM_FLOOR

    def __post_init__(self):
        if not 0.0 < self.step_gain < 2.0:
            raise ValueError(f"step_gain must lie in (0, 2), got {self.step_gain}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.denom_floor <= 0.0:
            raise ValueError("denom_floor must be positive")


@dataclass(frozen=True)
class TransitionRecord:
    """One plant transition: joint state, joint increment, measured feature increment,
    and the hidden-layer activations of every column network at that joint state."""

    q: np.ndarray
    du: np.ndarray
    dy: np.ndarray
    thetas: tuple


class HistoryWindow:
    """Ring buffer of the last window+1 transitions, newest first on read.

    The residual sums run over the newest `window` records; the step-size
    denominator includes one extra record, so capacity is window + 1.
    """

    def __init__(self, window=DEFAULT_WINDOW):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._buf = deque(maxlen=window + 1)

    def __len__(self):
        return len(self._buf)

    def record(self, models, q, du, dy):
        q = np.asarray(q, dtype=float)
        thetas = tuple(_layer_thetas(models, q))
        self._buf.append(TransitionRecord(
            q=q.copy(),
            du=np.asarray(du, dtype=float).copy(),
            dy=np.asarray(dy, dtype=float).copy(),
            thetas=thetas,
        ))

    def recent(self, n):
        """The newest n records, newest first."""
        return list(self._buf)[::-1][:n]

    def clear(self):
        self._buf.clear()

    def dump_rows(self):
        """Flat rows (q, du, dy) for CSV debugging dumps."""
        return [np.concatenate([r.q, r.du, r.dy]) for r in self._buf]


def _layer_thetas(models, q):
    """Activations of every model at q, computed once per distinct layer."""
    cache = {}
    out = []
    for model in models:
        key = id(model.layer)
        if key not in cache:
            cache[key] = activations(model.layer, q)
        out.append(cache[key])
    return out


def predict_jacobian(models, q):
    """3x6 Jacobian estimate: column i is the i-th network's output at q.

    Also serves as the controller's sensitivity surrogate for the next
    feature increment per unit joint increment.
    """
    if len(models) != N_COLUMNS:
        raise DimensionError(f"expected {N_COLUMNS} column networks, got {len(models)}")
    thetas = _layer_thetas(models, np.asarray(q, dtype=float))
    jac = np.empty((FEATURE_DIM, N_COLUMNS))
    for i, model in enumerate(models):
        jac[:, i] = model.weights @ thetas[i]
    return jac


def _predicted_increment(models, rec):
    """Model-predicted feature increment for one record, current weights with
    the activations captured when the record was stored."""
    dy_hat = np.zeros(FEATURE_DIM)
    for m, model in enumerate(models):
        dy_hat += (model.weights @ rec.thetas[m]) * rec.du[m]
    return dy_hat


def windowed_criterion(window, models):
    """Sum of squared feature-increment residuals over the newest `window` records."""
    if len(window) < window.window:
        raise WindowUnderfullError(
            f"criterion needs {window.window} records, window holds {len(window)}"
        )
    total = 0.0
    for rec in window.recent(window.window):
        resid = rec.dy - _predicted_increment(models, rec)
        total += float(resid @ resid)
    return total


def update_step_size(window, params):
    """Adaptive (negative) step size, -gain over the windowed excitation sum.

    The denominator sums du_m^2 ||theta_m||^2 over the newest window+1 records
    and is floored so a standstill plant cannot divide by zero.
    """
    denom = 0.0
    for rec in window.recent(params.window + 1):
        for m in range(N_COLUMNS):
            denom += rec.du[m] ** 2 * float(rec.thetas[m] @ rec.thetas[m])
    return -params.step_gain / max(denom, params.denom_floor)


def online_update(models, window, params):
    """One descent step of the column-network weights on the windowed residual.

    For every network m and hidden unit n:
        W_mn <- W_mn - alpha2 * sum_t resid(t) * du_m(t) * theta_mn(t)
    with resid(t) computed from the pre-update weights and alpha2 < 0 from
    update_step_size. Returns new models; the inputs are left untouched.
    """
    records = window.recent(params.window)
    alpha2 = update_step_size(window, params)
    residuals = [rec.dy - _predicted_increment(models, rec) for rec in records]
    updated = []
    for m, model in enumerate(models):
        delta = np.zeros_like(model.weights)
        for rec, resid in zip(records, residuals):
            # outer(resid, theta_m) scaled by this joint's increment
            delta += rec.du[m] * np.outer(resid, rec.thetas[m])
        updated.append(RbfNetworkModel(layer=model.layer, weights=model.weights - alpha2 * delta))
    return updated


def fit_column_networks(layer, inputs, jacobians, ridge=1e-8):
    """Offline fit of the six column networks from (q, 3x6 Jacobian) pairs.

    jacobians has shape (n, 3, 6); column i of every sample trains network i.
    """
    jacobians = np.asarray(jacobians, dtype=float)
    if jacobians.ndim != 3 or jacobians.shape[1:] != (FEATURE_DIM, N_COLUMNS):
        raise DimensionError(f"jacobians must be (n, 3, 6), got {jacobians.shape}")
    models = []
    for i in range(N_COLUMNS):
        data = TrainingSet(inputs=inputs, targets=jacobians[:, :, i])
        models.append(fit_offline(layer, data, ridge=ridge))
    return models


class RbfJacobianEstimator:
    """Closed-loop wrapper: prediction, transition recording, online updates."""

    def __init__(self, models, params=None, update_enabled=True):
        self.models = list(models)
        self.params = params or EstimatorParams()
        self.window = HistoryWindow(self.params.window)
        self.update_enabled = update_enabled
        self.last_step_size = 0.0
        self.last_criterion = float("nan")

    def predict(self, q):
        return predict_jacobian(self.models, q)

    def observe_transition(self, q_before, du, dy):
        self.window.record(self.models, q_before, du, dy)
        if self.update_enabled and len(self.window) >= self.params.window:
            self.last_step_size = update_step_size(self.window, self.params)
            self.last_criterion = windowed_criterion(self.window, self.models)
            self.models = online_update(self.models, self.window, self.params)


# --- UKF estimator for the comparison controllers ----------------------------
#
# State is the row-major stack of the 3x6 Jacobian. The process model is a
# random walk (mean kept, covariance grown by the process noise); the
# measurement is dy = J du, linear in the state. Sigma points use the
# standard scaled unscented transform with alpha=1, beta=2, kappa=0.

UKF_ALPHA = 1.0
UKF_BETA = 2.0
UKF_KAPPA = 0.0
JAC_STATE_DIM = FEATURE_DIM * N_COLUMNS


@dataclass
class UkfState:
    mean: np.ndarray
    cov: np.ndarray
    process_noise: np.ndarray
    measurement_noise: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        self.process_noise = np.asarray(self.process_noise, dtype=float)
        self.measurement_noise = np.asarray(self.measurement_noise, dtype=float)
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise DimensionError("covariance shape does not match the mean")
        _cholesky_or_raise(self.cov)

    @classmethod
    def from_jacobian(cls, jac, init_cov=1e-2, process_noise=1e-10, measurement_noise=1e-8):
        jac = np.asarray(jac, dtype=float)
        n = jac.size
        return cls(
            mean=jac.reshape(-1).copy(),
            cov=init_cov * np.eye(n),
            process_noise=process_noise * np.eye(n),
            measurement_noise=measurement_noise * np.eye(FEATURE_DIM),
        )

    def jacobian(self):
        return self.mean.reshape(FEATURE_DIM, N_COLUMNS)


def _cholesky_or_raise(mat):
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise CovarianceError(
            "covariance is not positive definite; symmetrize and add jitter "
            "(e.g. 1e-12 I) before retrying"
        ) from exc


def _sigma_points(mean, cov):
    n = mean.shape[0]
    lam = UKF_ALPHA**2 * (n + UKF_KAPPA) - n
    c = n + lam
    spread = _cholesky_or_raise(c * cov)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    points[1 : n + 1] = mean + spread.T
    points[n + 1 :] = mean - spread.T
    w_mean = np.full(2 * n + 1, 1.0 / (2.0 * c))
    w_cov = np.full(2 * n + 1, 1.0 / (2.0 * c))
    w_mean[0] = lam / c
    w_cov[0] = lam / c + (1.0 - UKF_ALPHA**2 + UKF_BETA)
    return points, w_mean, w_cov


def ukf_update(state, du, dy):
    """One predict + update cycle; returns a new UkfState.

    With du = 0 the measurement carries no information: the mean is kept and
    the covariance grows by the process noise.
    """
    du = np.asarray(du, dtype=float)
    dy = np.asarray(dy, dtype=float)
    n = state.mean.shape[0]

    cov_prior = state.cov + state.process_noise
    points, w_mean, w_cov = _sigma_points(state.mean, cov_prior)

    # linear measurement: dy = reshape(x) @ du
    z_sig = points.reshape(-1, FEATURE_DIM, N_COLUMNS) @ du
    z_pred = w_mean @ z_sig
    dz = z_sig - z_pred
    dx = points - state.mean
    s = (w_cov[:, None] * dz).T @ dz + state.measurement_noise
    cross = (w_cov[:, None] * dx).T @ dz
    gain = cross @ np.linalg.inv(s)

    mean_post = state.mean + gain @ (dy - z_pred)
    cov_post = cov_prior - gain @ s @ gain.T
    cov_post = 0.5 * (cov_post + cov_post.T)
    return UkfState(
        mean=mean_post,
        cov=cov_post,
        process_noise=state.process_noise,
        measurement_noise=state.measurement_noise,
    )


class UkfJacobianEstimator:
    """Closed-loop wrapper with the same surface as RbfJacobianEstimator."""

    def __init__(self, state):
        self.state = state
        self.last_step_size = 0.0
        self.last_criterion = float("nan")

    def predict(self, q):
        return self.state.jacobian()

    def observe_transition(self, q_before, du, dy):
        self.state = ukf_update(self.state, du, dy)
        resid = np.asarray(dy) - self.state.jacobian() @ np.asarray(du)
        self.last_criterion = float(resid @ resid)
