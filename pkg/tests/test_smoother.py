import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatid.discretize import DiscreteSystem
from heatid.gp_sde import KernelHyperparams, gp_transition, kernel_matrix
from heatid.smoother import (
    GaussianState, SingularModelError, TimeSeriesData, kf_predict, kf_update,
    log_marginal_likelihood, rts_smooth, run_smoother,
)

from oracles import gp_regression, joint_gaussian, random_instance


def scalar_system(A=1.0, B=0.0, Q=1.0, C=1.0, R=1.0, m0=0.0, S0=1.0):
    return DiscreteSystem(A=np.array([[A]]), B=np.array([[B]]), Q=np.array([[Q]]), C=np.array([[C]]),
                          R=np.array([[R]]), m0=np.array([m0]), S0=np.array([[S0]]), dt=1.0)


def scalar(mean, var):
    return GaussianState(np.array([mean]), np.array([[var]]))


class TestPredict:
    def test_identity(self):
        sys = scalar_system(A=1.0, B=0.0, Q=0.0)
        out = kf_predict(scalar(3.0, 2.0), sys, [5.0])
        assert out.mean[0] == 3.0 and out.cov[0, 0] == 2.0

    def test_noise_grows_cov(self):
        sys = scalar_system(A=1.0, Q=0.25)
        assert kf_predict(scalar(0.0, 2.0), sys, [0.0]).cov[0, 0] == pytest.approx(2.25)

    def test_reference(self):
        sys = scalar_system(A=0.5, B=1.0, Q=0.1)
        out = kf_predict(scalar(2.0, 1.0), sys, [1.0])
        assert out.mean[0] == pytest.approx(2.0)
        assert out.cov[0, 0] == pytest.approx(0.35)


class TestUpdate:
    def test_uninformative(self):
        sys = scalar_system(R=1e12)
        post, ll = kf_update(scalar(1.0, 2.0), [3.0], sys)
        assert post.mean[0] == pytest.approx(1.0, abs=1e-9)
        assert post.cov[0, 0] == pytest.approx(2.0, rel=1e-9)
        assert ll == pytest.approx(-0.5 * np.log(2 * np.pi * 1e12), abs=1e-6)

    def test_exact_observation(self):
        sys = scalar_system(R=0.0)
        post, _ = kf_update(scalar(1.0, 2.0), [3.0], sys)
        assert post.mean[0] == pytest.approx(3.0)
        assert post.cov[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_reference(self):
        post, ll = kf_update(scalar(0.0, 1.0), [2.0], scalar_system(R=1.0))
        assert post.mean[0] == pytest.approx(1.0)
        assert post.cov[0, 0] == pytest.approx(0.5)
        assert ll == pytest.approx(-2.2655, abs=1e-4)
        assert ll == pytest.approx(-0.5 * (2.0 + np.log(2.0) + np.log(2 * np.pi)), rel=1e-12)

    def test_missing_skips_correction(self):
        pred = scalar(1.0, 2.0)
        post, ll = kf_update(pred, [np.nan], scalar_system())
        assert post is pred and ll == 0.0

    def test_singular_innovation(self):
        with pytest.raises(SingularModelError):
            kf_update(scalar(0.0, 0.0), [1.0], scalar_system(R=0.0))


class TestRts:
    def test_single_step(self):
        sys = scalar_system()
        data = TimeSeriesData(1.0, [[0.0]], [[1.0]])
        res = run_smoother(data, sys)
        np.testing.assert_array_equal(res.smoothed_means, res.filtered_means)
        np.testing.assert_array_equal(res.smoothed_covs, res.filtered_covs)

    def test_no_temporal_coupling(self):
        sys = scalar_system(A=0.0)
        data = TimeSeriesData(1.0, np.zeros((4, 1)), [[1.0], [-1.0], [2.0], [0.5]])
        res = run_smoother(data, sys)
        np.testing.assert_allclose(res.smoothed_means, res.filtered_means)
        np.testing.assert_allclose(res.smoothed_covs, res.filtered_covs)

    def test_two_step_reference(self):
        sys = scalar_system(A=1.0, Q=1.0, R=1.0)
        data = TimeSeriesData(1.0, np.zeros((2, 1)), [[0.0], [2.0]])
        res = run_smoother(data, sys)
        means, covs, _ = joint_gaussian(sys, data.inputs, list(data.measurements))
        np.testing.assert_allclose(res.smoothed_means[:, 0], means[:, 0], atol=1e-12)
        np.testing.assert_allclose(res.smoothed_means[:, 0], [0.5, 1.25], atol=1e-12)

    def test_standalone_matches_run(self):
        sys, data = random_instance(np.random.default_rng(4), n=3, p=2, N=5)
        res = run_smoother(data, sys)
        ms, Ss = rts_smooth(res.filtered_means, res.filtered_covs, res.predicted_means, res.predicted_covs, sys)
        np.testing.assert_allclose(ms, res.smoothed_means)
        np.testing.assert_allclose(Ss, res.smoothed_covs)


class TestRunSmoother:
    def test_single_step_marginal(self):
        sys = scalar_system()
        data = TimeSeriesData(1.0, [[0.0]], [[1.5]])
        res = run_smoother(data, sys)
        pred = kf_predict(GaussianState(sys.m0, sys.S0), sys, [0.0])
        _, ll = kf_update(pred, [1.5], sys)
        assert res.log_marginal == pytest.approx(ll)
        assert log_marginal_likelihood(data, sys) == pytest.approx(ll)

    @pytest.mark.parametrize("seed", range(20))
    def test_joint_gaussian_oracle(self, seed):
        sys, data = random_instance(np.random.default_rng(seed))
        res = run_smoother(data, sys)
        means, covs, logp = joint_gaussian(sys, data.inputs, list(data.measurements))
        assert res.log_marginal == pytest.approx(logp, rel=1e-8)
        np.testing.assert_allclose(res.smoothed_means, means, atol=1e-6)
        np.testing.assert_allclose(res.smoothed_covs, covs, atol=1e-6)

    def test_pure_gp_matches_batch_regression(self):
        psi = KernelHyperparams(1.5, 4.0)
        dt, N, noise = 0.5, 50, 0.1
        a, q = gp_transition(psi, dt)
        sys = DiscreteSystem(A=np.array([[a]]), B=np.zeros((1, 1)), Q=np.array([[q]]), C=np.eye(1),
                             R=np.array([[noise]]), m0=np.zeros(1), S0=np.array([[psi.gamma**2]]), dt=dt)
        y = np.random.default_rng(1).standard_normal(N)
        res = run_smoother(TimeSeriesData(dt, np.zeros((N, 1)), y[:, None]), sys)
        t = dt * np.arange(1, N + 1)
        mean, var = gp_regression(kernel_matrix(psi, t), noise, y)
        np.testing.assert_allclose(res.smoothed_means[:, 0], mean, atol=1e-6)
        np.testing.assert_allclose(res.smoothed_covs[:, 0, 0], var, atol=1e-6)

    def test_dropout(self):
        sys, data = random_instance(np.random.default_rng(7), n=3, p=2, N=5)
        y = data.measurements.copy()
        y[2, :] = np.nan
        y[3, 1] = np.nan
        res = run_smoother(TimeSeriesData(1.0, data.inputs, y), sys)
        np.testing.assert_array_equal(res.filtered_means[2], res.predicted_means[2])
        means, covs, logp = joint_gaussian(sys, data.inputs, list(y))
        assert res.log_marginal == pytest.approx(logp, rel=1e-8)
        np.testing.assert_allclose(res.smoothed_means, means, atol=1e-6)
        np.testing.assert_allclose(res.smoothed_covs, covs, atol=1e-6)

    def test_error_reports_step(self):
        sys = scalar_system(Q=0.0, R=0.0, S0=0.0)
        data = TimeSeriesData(1.0, np.zeros((3, 1)), np.ones((3, 1)))
        with pytest.raises(SingularModelError) as err:
            run_smoother(data, sys)
        assert err.value.step == 1

    def test_dimension_check(self):
        sys = scalar_system()
        with pytest.raises(ValueError):
            run_smoother(TimeSeriesData(1.0, np.zeros((3, 1)), np.ones((3, 2))), sys)

    @pytest.mark.parametrize("seed", range(5))
    def test_initial_smoothed_state(self, seed):
        sys, data = random_instance(np.random.default_rng(seed))
        res = run_smoother(data, sys)
        means, covs, _ = joint_gaussian(sys, data.inputs, list(data.measurements), include_initial=True)
        np.testing.assert_allclose(res.initial.mean, means[0], atol=1e-6)
        np.testing.assert_allclose(res.initial.cov, covs[0], atol=1e-6)


class TestInvariants:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_posterior_cov_shrinks(self, seed):
        sys, data = random_instance(np.random.default_rng(seed))
        res = run_smoother(data, sys)
        for Sp, Sf in zip(res.predicted_covs, res.filtered_covs):
            assert np.linalg.eigvalsh(Sp - Sf).min() >= -1e-10
            np.testing.assert_allclose(Sf, Sf.T, atol=1e-10)

    def test_time_series_validation(self):
        with pytest.raises(ValueError):
            TimeSeriesData(1.0, np.zeros((3, 2)), np.zeros((4, 1)))
        with pytest.raises(ValueError):
            TimeSeriesData(0.0, np.zeros((3, 2)), np.zeros((3, 1)))
