import numpy as np
import pytest

from servolab import baselines, estimator, rbf
from servolab.baselines import (
    MfacParams, MpcParams, RbfPidParams, damped_pinv, mfac_tick, mpc_coeffs,
    mpc_tick, rbf_pid_tick,
)

# frozen extended-precision evaluation (mpmath, 40 digits) of the closed-form
# coefficients at horizon 2, forgetting factor 0.5, decay 0.1
COEFF_A = 0.9801070388407869600201448
COEFF_B = 0.8396792153097241447222239
COEFF_C = 0.7481218359964696758370175


def identity_pad_models():
    """Single-unit nets whose Jacobian at q=0 is exactly [I3 | 0]."""
    layer = rbf.RbfLayer(centers=[np.zeros(6)], radii=[1.0])
    models = []
    for i in range(6):
        w = np.zeros((3, 1))
        if i < 3:
            w[i, 0] = 1.0
        models.append(rbf.RbfNetworkModel(layer=layer, weights=w))
    return models


class TestDampedPinv:
    def test_matches_numpy_when_well_conditioned(self):
        rng = np.random.default_rng(0)
        mat = rng.standard_normal((3, 6))
        np.testing.assert_allclose(damped_pinv(mat), np.linalg.pinv(mat), atol=1e-10)

    def test_finite_on_singular(self):
        mat = np.zeros((3, 6))
        mat[0, 0] = 1.0  # rank 1
        out = damped_pinv(mat)
        assert np.all(np.isfinite(out))
        assert out[0, 0] == pytest.approx(1.0 / (1.0 + baselines.PINV_DAMPING))


class TestRbfPid:
    def test_zero_error_zero_command_and_update(self):
        models = identity_pad_models()
        params = RbfPidParams(gain=1.0)
        u, updated, vdot = rbf_pid_tick(models, np.zeros(6), np.zeros(3), np.zeros(3), params, 0.05)
        np.testing.assert_array_equal(u, np.zeros(6))
        for a, b in zip(models, updated):
            np.testing.assert_array_equal(a.weights, b.weights)
        assert vdot == 0.0

    def test_identity_pad_command(self):
        models = identity_pad_models()
        params = RbfPidParams(gain=1.0)
        u, _, _ = rbf_pid_tick(models, np.zeros(6), np.array([1.0, 0, 0]), np.zeros(3), params, 0.05)
        np.testing.assert_allclose(u, [-1.0, 0, 0, 0, 0, 0], atol=1e-12)

    def test_monitor_nonpositive(self):
        rng = np.random.default_rng(1)
        models = identity_pad_models()
        params = RbfPidParams(gain=1.5, n2=0.7, n3=0.9)
        for _ in range(20):
            dx = rng.standard_normal(3)
            res = rng.standard_normal(3)
            _, _, vdot = rbf_pid_tick(models, np.zeros(6), dx, res, params, 0.05)
            expected = -1.5 * 0.7 * dx @ dx - 0.9 * res @ res
            assert vdot == pytest.approx(expected)
            assert vdot <= 0.0

    def test_update_direction_matches_hand_formula(self):
        models = identity_pad_models()
        params = RbfPidParams(gain=1.0, n2=2.0, n3=3.0)
        dx = np.array([0.2, -0.1, 0.4])
        res = np.array([0.05, 0.0, -0.02])
        dt = 0.05
        u, updated, _ = rbf_pid_tick(models, np.zeros(6), dx, res, params, dt)
        theta = 1.0  # at the center
        for i in range(6):
            expected = models[i].weights + dt * u[i] * np.outer(2.0 * res + 3.0 * dx, [theta])
            np.testing.assert_allclose(updated[i].weights, expected, atol=1e-14)

    def test_rejects_nonpositive_gains(self):
        for kw in (dict(gain=0.0), dict(n2=-1.0), dict(n3=0.0)):
            with pytest.raises(ValueError):
                RbfPidParams(**kw)


class TestMfac:
    def test_zero_error_fixed_point(self):
        rng = np.random.default_rng(2)
        jac = rng.standard_normal((3, 6))
        r = rng.standard_normal(6)
        np.testing.assert_array_equal(mfac_tick(jac, r, np.zeros(3), MfacParams(lam=1.0)), r)

    def test_large_lambda_kills_increment(self):
        rng = np.random.default_rng(3)
        jac = rng.standard_normal((3, 6))
        r = np.zeros(6)
        inc = mfac_tick(jac, r, rng.standard_normal(3), MfacParams(lam=1e12))
        assert np.max(np.abs(inc)) < 1e-9

    def test_scalar_reduction(self):
        jac = np.zeros((3, 6))
        jac[0, 0] = 2.0
        r = np.zeros(6)
        out = mfac_tick(jac, r, np.array([3.0, 0, 0]), MfacParams(lam=1.0))
        assert out[0] == pytest.approx((1 / (1 + 4)) * 2 * 3)
        np.testing.assert_allclose(out[1:], np.zeros(5), atol=1e-15)

    def test_increment_solves_damped_least_squares(self):
        # argmin lam ||dr||^2 + ||e - J dr||^2 via an independent stacked solve
        rng = np.random.default_rng(4)
        params = MfacParams(lam=0.37)
        for _ in range(20):
            jac = rng.standard_normal((3, 6))
            e = rng.standard_normal(3)
            inc = mfac_tick(jac, np.zeros(6), e, params)
            stacked_a = np.vstack([jac, np.sqrt(params.lam) * np.eye(6)])
            stacked_b = np.concatenate([e, np.zeros(6)])
            expected, *_ = np.linalg.lstsq(stacked_a, stacked_b, rcond=None)
            np.testing.assert_allclose(inc, expected, atol=1e-10)

    def test_rejects_bad_lambda(self):
        with pytest.raises(ValueError):
            MfacParams(lam=0.0)


class TestMpcCoeffs:
    def test_frozen_reference_values(self):
        a, b, c = mpc_coeffs(MpcParams(horizon=2, alpha_star=0.5, rho=0.1))
        assert b == pytest.approx(COEFF_B, rel=1e-12)
        assert c == pytest.approx(COEFF_C, rel=1e-12)
        assert a == pytest.approx(COEFF_A, rel=1e-12)

    def test_c_approaches_b_as_decay_vanishes(self):
        base = MpcParams(horizon=2, alpha_star=0.5, rho=1e-9)
        a, b, c = mpc_coeffs(base)
        assert c == pytest.approx(b, rel=1e-6)

    def test_alpha_one_rejected(self):
        with pytest.raises(ValueError):
            MpcParams(alpha_star=1.0)

    def test_smooth_in_parameters(self):
        # central-difference smoothness probe away from alpha=1
        def coeffs_at(h, alpha, rho):
            return np.array(mpc_coeffs(MpcParams(horizon=h, alpha_star=alpha, rho=rho)))

        base = coeffs_at(3, 0.6, 0.2)
        eps = 1e-6
        for dalpha, drho in ((eps, 0.0), (0.0, eps)):
            plus = coeffs_at(3, 0.6 + dalpha, 0.2 + drho)
            minus = coeffs_at(3, 0.6 - dalpha, 0.2 - drho)
            second = plus - 2 * base + minus
            assert np.max(np.abs(second)) < 1e-6  # no jumps at the working point


class TestMpcTick:
    def test_zero_error_fixed_point(self):
        rng = np.random.default_rng(5)
        jac = rng.standard_normal((3, 6))
        r = rng.standard_normal(6)
        out = mpc_tick(jac, r, np.zeros(3), MpcParams())
        np.testing.assert_array_equal(out, r)

    def test_vanishing_decay_zeroes_increment(self):
        rng = np.random.default_rng(6)
        jac = rng.standard_normal((3, 6))
        r = rng.standard_normal(6)
        out = mpc_tick(jac, r, rng.standard_normal(3), MpcParams(rho=1e-12))
        np.testing.assert_allclose(out, r, atol=1e-9)

    def test_scalar_reduction(self):
        params = MpcParams(horizon=2, alpha_star=0.5, rho=0.1,
                           command_weight=np.eye(6))
        jac = np.zeros((3, 6))
        jac[0, 0] = 1.0
        e = np.array([2.0, 0, 0])
        out = mpc_tick(jac, np.zeros(6), e, params)
        a, b, c = mpc_coeffs(params)
        # pinv(J^T) Q contributes 1 in the (0,0) slot, so the scalar inner
        # matrix is (a + 1) and the increment is (b - c) e / (a + 1)
        assert out[0] == pytest.approx((b - c) * 2.0 / (a + 1.0), rel=1e-9)

    def test_rejects_bad_weight(self):
        with pytest.raises(ValueError):
            MpcParams(command_weight=np.zeros((6, 6)))
        with pytest.raises(ValueError):
            MpcParams(command_weight=-np.eye(6))


class TestControllersLeaveRestingPlant:
    def test_all_schemes_hold_position_at_zero_error(self):
        models = identity_pad_models()
        y = np.array([0.1, 0.2, 0.3])
        ukf = estimator.UkfState.from_jacobian(np.eye(3, 6))
        ctls = [
            baselines.RbfPidController(models),
            baselines.UkfMfacController(ukf),
            baselines.UkfMpcController(ukf),
        ]
        for ctl in ctls:
            for _ in range(3):
                u = ctl.tick(np.zeros(6), y, y, transition=(np.zeros(6), np.zeros(3)))
                np.testing.assert_allclose(u, np.zeros(6), atol=1e-12)
