"""Fixed eye-to-hand depth camera.

One rigid transform maps base-frame end-effector positions into the camera
frame; that 3-vector is the feedback feature. Optional zero-mean Gaussian
noise models the sensor.
"""

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-12


@dataclass(frozen=True)
class CameraPose:
    """Base-to-camera rigid transform: y = rotation @ p_base + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {t.shape}")
        if np.max(np.abs(r.T @ r - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(r) < 0.0:
            raise ValueError("rotation must be proper (det +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def overhead(cls, height=1.5, center_x=0.4):
        """Default pose: camera above the workspace looking straight down.

        Camera x aligns with base x, camera z points down, camera origin at
        (center_x, 0, height) in the base frame, so depth (camera z) of a
        workspace point is positive.
        """
        rot = np.diag([1.0, -1.0, -1.0])
        origin = np.array([center_x, 0.0, height])
        return cls(rotation=rot, translation=-rot @ origin)

    def inverse_observe(self, y):
        """Recover the base-frame point from a noiseless feature."""
        return self.rotation.T @ (np.asarray(y, dtype=float) - self.translation)


def observe(pose, p_base, noise_std=0.0, rng=None):
    """Camera-frame feature of a base-frame point, with optional Gaussian noise.

    noise_std is the per-axis standard deviation in meters; 0 means exact.
    Callers pass a seeded numpy Generator for reproducible noise.
    """
    p = np.asarray(p_base, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"p_base must be a 3-vector, got {p.shape}")
    y = pose.rotation @ p + pose.translation
    if noise_std > 0.0:
        if rng is None:
            rng = np.random.default_rng()
        y = y + rng.normal(0.0, noise_std, size=3)
    return y
