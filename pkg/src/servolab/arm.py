"""Kinematic ground truth for a 6-DOF serial arm.

Standard Denavit-Hartenberg forward kinematics, the analytic position
Jacobian, and discrete-time integration of joint velocity commands. A
configurable perturbation (link length scale, joint angle offset) lets the
closed-loop plant differ from the nominal table used for offline training.
"""

from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 6

# Standard UR5 table: a [m], alpha [rad], d [m], theta offset [rad].
UR5_A = (0.0, -0.425, -0.39225, 0.0, 0.0, 0.0)
UR5_ALPHA = (np.pi / 2, 0.0, 0.0, np.pi / 2, -np.pi / 2, 0.0)
UR5_D = (0.089159, 0.0, 0.0, 0.10915, 0.09465, 0.0823)

DEFAULT_QDOT_MAX = 1.0  # rad/s per joint
DEFAULT_DT = 0.05  # s


def _as_joint_vector(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.shape != (N_JOINTS,):
        raise ValueError(f"{name} must have shape ({N_JOINTS},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class DhParams:
    """Per-joint standard DH rows: link length a, twist alpha, offset d, theta offset."""

    a: np.ndarray
    alpha: np.ndarray
    d: np.ndarray
    theta_offset: np.ndarray

    def __post_init__(self):
        for name in ("a", "alpha", "d", "theta_offset"):
            object.__setattr__(self, name, _as_joint_vector(getattr(self, name), name))

    @classmethod
    def ur5(cls):
        return cls(a=UR5_A, alpha=UR5_ALPHA, d=UR5_D, theta_offset=np.zeros(N_JOINTS))


@dataclass(frozen=True)
class PlantPerturbation:
    """Plant/model mismatch: multiplicative link-length error, additive angle offset."""

    length_scale: np.ndarray = field(default_factory=lambda: np.ones(N_JOINTS))
    angle_offset: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))

    def __post_init__(self):
        object.__setattr__(self, "length_scale", _as_joint_vector(self.length_scale, "length_scale"))
        object.__setattr__(self, "angle_offset", _as_joint_vector(self.angle_offset, "angle_offset"))

    @classmethod
    def identity(cls):
        return cls()

    @property
    def is_identity(self):
        return bool(np.all(self.length_scale == 1.0) and np.all(self.angle_offset == 0.0))


IDENTITY_PERTURBATION = PlantPerturbation.identity()


def _dh_transform(a, alpha, d, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _chain(dh, q, pert):
    """Homogeneous transforms T_0^1 ... T_0^6 for the (perturbed) table."""
    a = dh.a * pert.length_scale
    d = dh.d * pert.length_scale
    theta = q + dh.theta_offset + pert.angle_offset
    frames = []
    t = np.eye(4)
    for i in range(N_JOINTS):
        t = t @ _dh_transform(a[i], dh.alpha[i], d[i], theta[i])
        frames.append(t)
    return frames


def forward_kinematics(dh, q, pert=IDENTITY_PERTURBATION):
    """Base-frame end-effector position [m] for joint angles q [rad]."""
    q = _as_joint_vector(q, "q")
    return _chain(dh, q, pert)[-1][:3, 3].copy()


def analytic_jacobian(dh, q, pert=IDENTITY_PERTURBATION):
    """3x6 position Jacobian d(position)/dq [m/rad].

    Column j is z_{j-1} x (p_end - p_{j-1}) for revolute joint j, built from
    the same transform chain as forward_kinematics.
    """
    q = _as_joint_vector(q, "q")
    frames = _chain(dh, q, pert)
    p_end = frames[-1][:3, 3]
    jac = np.empty((3, N_JOINTS))
    z_prev = np.array([0.0, 0.0, 1.0])
    p_prev = np.zeros(3)
    for j in range(N_JOINTS):
        jac[:, j] = np.cross(z_prev, p_end - p_prev)
        z_prev = frames[j][:3, 2]
        p_prev = frames[j][:3, 3]
    return jac


def wrap_angle(q):
    """Wrap angles to (-pi, pi]."""
    w = np.mod(np.asarray(q, dtype=float), 2.0 * np.pi)
    return np.where(w > np.pi, w - 2.0 * np.pi, w)


def step(q, qdot_cmd, dt=DEFAULT_DT, qdot_max=DEFAULT_QDOT_MAX):
    """Euler step of the joint state under a clamped velocity command.

    q' = wrap(q + clamp(qdot_cmd, +-qdot_max) * dt), wrapped to (-pi, pi].
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    q = _as_joint_vector(q, "q")
    qdot = np.clip(_as_joint_vector(qdot_cmd, "qdot_cmd"), -qdot_max, qdot_max)
    return wrap_angle(q + qdot * dt)


def clamp_command(qdot_cmd, qdot_max=DEFAULT_QDOT_MAX):
    return np.clip(np.asarray(qdot_cmd, dtype=float), -qdot_max, qdot_max)
