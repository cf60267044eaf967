import numpy as np
import pytest

from servolab import camera


def random_pose(rng):
    # QR of a random matrix gives an orthonormal basis; force det +1
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return camera.CameraPose(rotation=q, translation=rng.standard_normal(3))


def test_identity_transform():
    pose = camera.CameraPose(rotation=np.eye(3), translation=np.zeros(3))
    np.testing.assert_array_equal(camera.observe(pose, [0.1, 0.2, 0.3]), [0.1, 0.2, 0.3])


def test_half_turn_about_z():
    rot = np.array([[-1.0, 0, 0], [0, -1.0, 0], [0, 0, 1.0]])
    pose = camera.CameraPose(rotation=rot, translation=np.zeros(3))
    np.testing.assert_allclose(camera.observe(pose, [1.0, 0, 0]), [-1.0, 0, 0], atol=1e-15)


def test_inverse_recovers_point():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pose = random_pose(rng)
        p = rng.standard_normal(3)
        y = camera.observe(pose, p)
        np.testing.assert_allclose(pose.inverse_observe(y), p, atol=1e-12)


def test_rigid_transform_preserves_distances():
    rng = np.random.default_rng(1)
    pose = random_pose(rng)
    for _ in range(20):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        da = np.linalg.norm(a - b)
        dy = np.linalg.norm(camera.observe(pose, a) - camera.observe(pose, b))
        assert dy == pytest.approx(da, abs=1e-12)


def test_noise_mean_close_to_noiseless():
    pose = camera.CameraPose.overhead()
    p = np.array([0.4, 0.1, 0.3])
    clean = camera.observe(pose, p)
    rng = np.random.default_rng(99)
    std = 0.02
    draws = np.array([camera.observe(pose, p, noise_std=std, rng=rng) for _ in range(10_000)])
    # mean of 1e4 draws has std s/100; allow 5 of those
    assert np.all(np.abs(draws.mean(axis=0) - clean) < 5 * std / 100)


def test_noise_zero_is_exact_and_seeded_noise_reproducible():
    pose = camera.CameraPose.overhead()
    p = np.array([0.4, 0.1, 0.3])
    np.testing.assert_array_equal(camera.observe(pose, p, noise_std=0.0), camera.observe(pose, p))
    a = camera.observe(pose, p, noise_std=0.01, rng=np.random.default_rng(7))
    b = camera.observe(pose, p, noise_std=0.01, rng=np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_rejects_non_orthonormal_rotation():
    with pytest.raises(ValueError):
        camera.CameraPose(rotation=np.eye(3) * 1.001, translation=np.zeros(3))


def test_rejects_reflection():
    with pytest.raises(ValueError):
        camera.CameraPose(rotation=np.diag([1.0, 1.0, -1.0]), translation=np.zeros(3))


def test_overhead_pose_depth_positive():
    pose = camera.CameraPose.overhead(height=1.5, center_x=0.4)
    y = camera.observe(pose, [0.4, 0.0, 0.3])
    assert y[2] == pytest.approx(1.2)
