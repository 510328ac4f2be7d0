"""Tests for the residual white-noise max-correlation test."""

import math

import numpy as np
import pytest

from maxseq.core import LagRule, RngSeed
from maxseq.dgp import (
    ArpSpec,
    ErrorSpec,
    ar1_population_moments,
    simulate_arp,
    simulate_errors,
)
from maxseq.estimate import ArFit, default_bandwidth, long_run_variance, ols_arp
from maxseq.whitenoise import (
    KernelMatrix,
    WhiteNoiseMaxTest,
    dwb_pvalue,
    estimate_z_kernel,
    expansion_gap,
    expansion_terms,
    gaussian_kernel_pvalue,
    max_corr_stat,
    oracle_corr_stats,
)
from maxseq.validation import ValidationError


def white_noise(n, seed):
    return simulate_errors(ErrorSpec(), n, RngSeed(seed))


def ar1_series(n, seed, phi=0.5, intercept=0.3):
    return simulate_arp(ArpSpec(intercept=intercept, coeffs=(phi,)), n, RngSeed(seed))


class TestMaxCorrStat:
    def test_null_series_stat_is_moderate(self):
        result = max_corr_stat(white_noise(100_000, 50), 1, 5)
        assert result.max_stat < 4.5
        assert result.per_lag.shape == (5,)
        assert result.max_stat == np.max(np.abs(result.per_lag))

    def test_detects_unmodelled_autocorrelation(self):
        # intercept-only fit leaves the AR(1) structure in the residuals
        y = ar1_series(2000, 51, phi=0.8)
        result = max_corr_stat(y, 0, 3)
        assert result.max_stat > 10.0

    def test_stats_only_fields(self):
        result = max_corr_stat(white_noise(200, 52), 1, 4)
        assert result.method == "stats"
        assert result.p_value is None
        assert result.reject is None
        assert (result.L, result.p) == (4, 1)

    def test_degenerate_residuals(self):
        # intercept-only fit on a constant series has exactly zero residuals
        with pytest.raises(ValueError, match="degenerate residual variance"):
            max_corr_stat(np.full(30, 3.0), 0, 2)

    def test_too_short_for_lags(self):
        with pytest.raises(ValidationError, match="need residual length > 30"):
            max_corr_stat(white_noise(25, 53), 1, 10)

    def test_scale_near_invariant(self):
        y = white_noise(400, 54)
        a = max_corr_stat(y, 1, 4)
        b = max_corr_stat(2.0 * y, 1, 4)
        np.testing.assert_allclose(b.per_lag, a.per_lag, rtol=1e-9)
        np.testing.assert_allclose(b.max_stat, a.max_stat, rtol=1e-9)


class TestExpansionTerms:
    def test_alternating_intercept_only_exact(self):
        # overlap sums of +-1 cancel exactly, so D_hat = 0 and z reduces to
        # the plain residual product
        alt = np.array([1.0, -1.0] * 5)
        fit = ArFit(
            theta_hat=np.array([0.0]),
            residuals=alt,
            regressors=np.ones((10, 1)),
            xtx_inv=np.array([[1.0]]),
            sigma2_eps_hat=1.0,
        )
        comp = expansion_terms(fit, fit.regressors, 1)
        assert comp.d_hat[0] == 0.0
        np.testing.assert_array_equal(comp.z_hat, alt[1:] * alt[:-1])
        assert comp.m == 10

    def test_d_hat_matches_population_value(self):
        # AR(1) with phi = 0.5: D(2) = -(0, phi * sigma2) = (0, -0.5)
        y = ar1_series(100_000, 55)
        fit = ols_arp(y, 1)
        comp = expansion_terms(fit, fit.regressors, 2)
        assert abs(comp.d_hat[1] - (-0.5)) < 0.03

    def test_lag_exceeds_sample(self):
        fit = ols_arp(white_noise(30, 56), 1)
        with pytest.raises(ValueError, match="lag exceeds sample"):
            expansion_terms(fit, fit.regressors, 29)

    def test_degenerate_variance(self):
        fit = ArFit(
            theta_hat=np.array([0.0]),
            residuals=np.zeros(10),
            regressors=np.ones((10, 1)),
            xtx_inv=np.array([[1.0]]),
            sigma2_eps_hat=0.0,
        )
        with pytest.raises(ValueError, match="degenerate residual variance"):
            expansion_terms(fit, fit.regressors, 1)

    def test_regressor_shape_checked(self):
        fit = ols_arp(white_noise(40, 57), 1)
        with pytest.raises(ValidationError, match="regressors must match"):
            expansion_terms(fit, np.ones((5, 2)), 1)

    def test_z_length(self):
        fit = ols_arp(white_noise(50, 58), 1)
        comp = expansion_terms(fit, fit.regressors, 3)
        assert len(comp.z_hat) == fit.m - 3
        assert comp.h == 3


class TestOracleCorrStats:
    def test_forced_coincidence_with_feasible(self):
        # oracle evaluated at the fitted parameter with zero d0 reproduces the
        # feasible statistics up to rounding
        y = ar1_series(500, 59)
        fit = ols_arp(y, 1)
        feasible = max_corr_stat(y, 1, 4)
        oracle = oracle_corr_stats(
            y,
            1,
            4,
            theta0=fit.theta_hat,
            sigma2_eps0=fit.sigma2_eps_hat,
            xtx0=np.linalg.inv(fit.xtx_inv),
            d0=np.zeros((4, 2)),
        )
        np.testing.assert_allclose(oracle, feasible.per_lag, atol=1e-12)

    def test_gap_zero_when_forced(self):
        y = ar1_series(500, 60)
        fit = ols_arp(y, 1)
        gap = expansion_gap(
            y,
            1,
            4,
            theta0=fit.theta_hat,
            sigma2_eps0=fit.sigma2_eps_hat,
            xtx0=np.linalg.inv(fit.xtx_inv),
            d0=np.zeros((4, 2)),
        )
        assert gap <= 1e-12

    def test_gap_bounded_by_pointwise_gap(self):
        spec = ArpSpec(intercept=0.3, coeffs=(0.5,))
        mom = ar1_population_moments(spec, 4)
        y = simulate_arp(spec, 1000, RngSeed(61))
        feasible = max_corr_stat(y, 1, 4)
        oracle = oracle_corr_stats(
            y, 1, 4, mom["theta0"], mom["sigma2_eps"], mom["xtx"], mom["d0"]
        )
        gap = expansion_gap(
            y, 1, 4, mom["theta0"], mom["sigma2_eps"], mom["xtx"], mom["d0"]
        )
        assert gap <= np.max(np.abs(feasible.per_lag - oracle)) + 1e-12

    def test_validation(self):
        y = white_noise(100, 62)
        with pytest.raises(ValidationError, match="one row per lag"):
            oracle_corr_stats(y, 1, 3, [0.0, 0.5], 1.0, np.eye(2), np.zeros((2, 2)))
        with pytest.raises(ValueError, match="degenerate residual variance"):
            oracle_corr_stats(y, 1, 2, [0.0, 0.5], 0.0, np.eye(2), np.zeros((2, 2)))


class TestEstimateZKernel:
    def comps_for(self, y, p, L):
        fit = ols_arp(y, p)
        return fit, [expansion_terms(fit, fit.regressors, h) for h in range(1, L + 1)]

    def test_diagonal_is_long_run_variance(self):
        _, comps = self.comps_for(white_noise(800, 63), 1, 3)
        kern = estimate_z_kernel(comps, 0)
        for i in range(3):
            assert kern.values[i, i] == long_run_variance(comps[i].z_hat, 0)

    def test_bandwidth_zero_diag_is_sample_variance(self):
        _, comps = self.comps_for(white_noise(600, 64), 1, 2)
        kern = estimate_z_kernel(comps, 0)
        z = comps[0].z_hat
        zc = z - z.mean()
        assert kern.values[0, 0] == float(zc @ zc) / len(z)

    def test_symmetric(self):
        _, comps = self.comps_for(white_noise(500, 65), 1, 4)
        kern = estimate_z_kernel(comps, 5)
        np.testing.assert_array_equal(kern.values, kern.values.T)

    def test_intercept_only_iid_diag_near_one(self):
        _, comps = self.comps_for(white_noise(100_000, 66), 0, 2)
        kern = estimate_z_kernel(comps, default_bandwidth(100_000))
        np.testing.assert_allclose(np.diag(kern.values), [1.0, 1.0], rtol=0.05)

    def test_fitted_ar1_diag_matches_classic_variance(self):
        # estimation effect shrinks the lag-1 variance to phi^2; without the
        # correction the estimate would sit near 1 (wrong-sign errors land at
        # 3.25), so a 10% band is sharply discriminating
        y = ar1_series(100_000, 40)
        _, comps = self.comps_for(y, 1, 3)
        kern = estimate_z_kernel(comps, default_bandwidth(100_000))
        targets = [0.25, 0.8125, 0.953125]
        np.testing.assert_allclose(np.diag(kern.values), targets, rtol=0.10)

    def test_mismatched_components(self):
        _, comps_a = self.comps_for(white_noise(300, 67), 1, 1)
        _, comps_b = self.comps_for(white_noise(400, 68), 1, 1)
        with pytest.raises(ValidationError, match="share a time range"):
            estimate_z_kernel(comps_a + comps_b, 0)

    def test_bandwidth_bounds(self):
        _, comps = self.comps_for(white_noise(50, 69), 1, 2)
        with pytest.raises(ValidationError, match="bandwidth"):
            estimate_z_kernel(comps, -1)
        with pytest.raises(ValidationError, match="bandwidth"):
            estimate_z_kernel(comps, len(comps[1].z_hat))

    def test_empty_components(self):
        with pytest.raises(ValidationError, match="at least one component"):
            estimate_z_kernel([], 0)


class TestKernelMatrix:
    def test_validation(self):
        with pytest.raises(ValidationError, match="square"):
            KernelMatrix(values=np.ones((2, 3)), bandwidth=0)
        with pytest.raises(ValidationError, match="symmetric"):
            KernelMatrix(values=np.array([[1.0, 0.5], [0.4, 1.0]]), bandwidth=0)
        with pytest.raises(ValidationError, match="nonnegative"):
            KernelMatrix(values=np.array([[-1.0, 0.0], [0.0, 1.0]]), bandwidth=0)


class TestDwbPvalue:
    def test_null_series_large_p(self):
        result = dwb_pvalue(white_noise(500, 70), 1, 4, 7, 300, RngSeed(71))
        assert result.p_value > 0.05
        assert result.method == "bootstrap"
        assert result.block_len == 7
        assert result.reps == 300
        assert result.reject == (result.p_value < result.level)

    def test_detects_dependence(self):
        y = ar1_series(500, 72)
        result = dwb_pvalue(y, 0, 4, 7, 300, RngSeed(73))
        assert result.reject
        assert result.p_value < 0.01

    def test_add_one_floor(self):
        result = dwb_pvalue(white_noise(200, 74), 1, 2, 5, 9, RngSeed(75))
        assert result.p_value >= 1.0 / 10.0
        assert result.p_value <= 1.0

    def test_deterministic(self):
        a = dwb_pvalue(white_noise(300, 76), 1, 3, 6, 100, RngSeed(77))
        b = dwb_pvalue(white_noise(300, 76), 1, 3, 6, 100, RngSeed(77))
        assert a.p_value == b.p_value
        np.testing.assert_array_equal(a.per_lag, b.per_lag)

    def test_thread_count_invariant(self):
        a = dwb_pvalue(white_noise(300, 78), 1, 3, 6, 120, RngSeed(79), threads=1)
        b = dwb_pvalue(white_noise(300, 78), 1, 3, 6, 120, RngSeed(79), threads=3)
        assert a.p_value == b.p_value

    def test_no_draws(self):
        with pytest.raises(ValueError, match="no bootstrap draws"):
            dwb_pvalue(white_noise(200, 80), 1, 2, 5, 0, RngSeed(0))

    def test_block_bounds(self):
        y = white_noise(100, 81)
        with pytest.raises(ValidationError, match="block length"):
            dwb_pvalue(y, 1, 2, 0, 10, RngSeed(0))
        with pytest.raises(ValidationError, match="block length"):
            dwb_pvalue(y, 1, 2, 99, 10, RngSeed(0))

    def test_level_bounds(self):
        with pytest.raises(ValidationError, match="level"):
            dwb_pvalue(white_noise(100, 82), 1, 2, 4, 10, RngSeed(0), level=0.0)


class TestGaussianKernelPvalue:
    def test_null_series_large_p(self):
        result = gaussian_kernel_pvalue(white_noise(500, 83), 1, 4, reps=300, seed=RngSeed(84))
        assert result.p_value > 0.05
        assert result.method == "gaussian_kernel"
        assert result.block_len is None

    def test_detects_dependence(self):
        y = ar1_series(500, 85)
        result = gaussian_kernel_pvalue(y, 0, 4, reps=300, seed=RngSeed(86))
        assert result.reject
        assert result.p_value < 0.01

    def test_deterministic(self):
        a = gaussian_kernel_pvalue(white_noise(300, 87), 1, 3, reps=100, seed=RngSeed(88))
        b = gaussian_kernel_pvalue(white_noise(300, 87), 1, 3, reps=100, seed=RngSeed(88))
        assert a.p_value == b.p_value

    def test_no_draws(self):
        with pytest.raises(ValueError, match="no bootstrap draws"):
            gaussian_kernel_pvalue(white_noise(200, 89), 1, 2, reps=0)


class TestWnTestResultValidation:
    def test_unknown_method(self):
        with pytest.raises(ValidationError, match="unknown method"):
            dwb_pvalue(white_noise(200, 90), 1, 2, 5, 10, RngSeed(0)).__class__(
                per_lag=np.zeros(2),
                max_stat=0.0,
                p_value=0.5,
                reject=False,
                method="magic",
                L=2,
                p=1,
            )

    def test_per_lag_length(self):
        from maxseq.whitenoise import WnTestResult

        with pytest.raises(ValidationError, match="per_lag length"):
            WnTestResult(
                per_lag=np.zeros(3),
                max_stat=0.0,
                p_value=None,
                reject=None,
                method="stats",
                L=2,
                p=1,
            )


class TestWhiteNoiseMaxTestEstimator:
    def test_fit_defaults(self):
        est = WhiteNoiseMaxTest(reps=100, seed=5)
        fitted = est.fit(white_noise(500, 91))
        assert fitted is est
        # power:1:0.25 at n = 500 gives floor(500^0.25) = 4
        assert est.L_ == 4
        assert est.block_len_ == int(math.floor(500 ** (1.0 / 3.0)))
        assert est.n_features_in_ == 1
        assert est.reject_ == (est.p_value_ < est.level)

    def test_lags_as_int(self):
        est = WhiteNoiseMaxTest(lags=3, reps=50).fit(white_noise(300, 92))
        assert est.L_ == 3

    def test_lags_as_rule_object(self):
        est = WhiteNoiseMaxTest(lags=LagRule.parse("fixed:2"), reps=50)
        est.fit(white_noise(300, 93))
        assert est.L_ == 2

    def test_explicit_block(self):
        est = WhiteNoiseMaxTest(lags=2, block=9, reps=50).fit(white_noise(300, 94))
        assert est.block_len_ == 9

    def test_stats_method(self):
        est = WhiteNoiseMaxTest(lags=3, method="stats").fit(white_noise(300, 95))
        assert est.p_value_ is None
        assert est.reject_ is None
        assert est.block_len_ is None

    def test_gaussian_kernel_method(self):
        est = WhiteNoiseMaxTest(lags=2, method="gaussian_kernel", reps=80, bandwidth=4)
        est.fit(white_noise(400, 96))
        assert est.result_.method == "gaussian_kernel"

    def test_unknown_method(self):
        with pytest.raises(ValidationError, match="unknown method"):
            WhiteNoiseMaxTest(method="magic").fit(white_noise(300, 97))

    def test_deterministic(self):
        y = white_noise(400, 98)
        a = WhiteNoiseMaxTest(lags=3, reps=100, seed=9).fit(y)
        b = WhiteNoiseMaxTest(lags=3, reps=100, seed=9).fit(y)
        assert a.p_value_ == b.p_value_
