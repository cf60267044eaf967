import numpy as np
import pytest

from servolab import arm, camera, estimator, rbf

# Training the default-sized estimator bank takes ~10 s, so it is built once
# per session and shared by the estimator, experiment, and acceptance tests.

TRAIN_SAMPLES = 5000
TRAIN_RANGE = np.pi / 2
N_HIDDEN = 800
RADIUS_SCALE = 2.0
TRAIN_SEED = 20240915

# interior joint configuration held out of the training set
HELD_OUT_Q = np.array([0.3, -0.9, 0.7, -0.6, 0.5, 0.4])


@pytest.fixture(scope="session")
def dh():
    return arm.DhParams.ur5()


@pytest.fixture(scope="session")
def cam_pose():
    return camera.CameraPose.overhead()


@pytest.fixture(scope="session")
def trained_estimator_models(dh, cam_pose):
    rng = np.random.default_rng(TRAIN_SEED)
    qs = rng.uniform(-TRAIN_RANGE, TRAIN_RANGE, (TRAIN_SAMPLES, 6))
    jacs = np.array([cam_pose.rotation @ arm.analytic_jacobian(dh, q) for q in qs])
    layer = rbf.place_centers(qs, N_HIDDEN, seed=TRAIN_SEED, radius_scale=RADIUS_SCALE)
    return estimator.fit_column_networks(layer, qs, jacs, ridge=1e-8)
