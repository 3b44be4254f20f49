"""Marginal ARMA-GARCH fitting and residual diagnostics."""

import math

import numpy as np
import pytest
from scipy import stats

from zenscope.margins import (
    DiagnosticScore,
    MarginalFit,
    acf,
    ad_pvalue,
    ad_statistic,
    ad_t_statistic,
    fit_arma_garch,
    ljung_box,
    qq_envelope,
    scaled_t_cdf,
    scaled_t_quantile,
    serial_dependence_order,
    simulate_arma_garch,
    standardized_residual_moments,
)

TRUE = dict(mu=0.0, phi=0.5, theta=0.2, alpha0=0.01, alpha1=0.10, beta=0.85, nu=5.0)


@pytest.fixture(scope="module")
def recovered_fit():
    rng = np.random.default_rng(12345)
    x = simulate_arma_garch(T=5000, rng=rng, **TRUE)
    return fit_arma_garch(x)


class TestMarginalFitType:
    def test_invariants_enforced(self):
        ok = dict(mu=0.0, phi=0.1, theta=0.1, alpha0=0.01, alpha1=0.1, beta=0.8,
                  nu=5.0, residuals=np.zeros(3), loglik=0.0, converged=True)
        MarginalFit(**ok)
        with pytest.raises(ValueError):
            MarginalFit(**{**ok, "phi": 1.0})
        with pytest.raises(ValueError):
            MarginalFit(**{**ok, "alpha1": 0.3, "beta": 0.7})
        with pytest.raises(ValueError):
            MarginalFit(**{**ok, "nu": 2.0})

    def test_diagnostic_p_value_range(self):
        with pytest.raises(ValueError):
            DiagnosticScore(statistic=1.0, p_value=1.5)


class TestFitArmaGarch:
    def test_constant_series_error(self):
        with pytest.raises(ValueError, match="constant"):
            fit_arma_garch(np.ones(200))

    def test_short_series_error(self):
        with pytest.raises(ValueError, match="length >= 100"):
            fit_arma_garch(np.random.default_rng(0).normal(size=50))

    def test_simulation_recovery(self, recovered_fit):
        # Loose per-parameter envelopes; the calibrated-interval version of
        # this check is the acceptance-criteria recovery test.
        f = recovered_fit
        assert abs(f.mu - TRUE["mu"]) < 0.05
        assert abs(f.phi - TRUE["phi"]) < 0.15
        assert abs(f.theta - TRUE["theta"]) < 0.15
        assert abs(f.alpha1 - TRUE["alpha1"]) < 0.06
        assert abs(f.beta - TRUE["beta"]) < 0.10
        assert 3.5 < f.nu < 7.5
        assert f.converged

    def test_residual_moments_near_standard(self, recovered_fit):
        mean, var = standardized_residual_moments(recovered_fit)
        assert abs(mean) < 0.1
        assert 0.8 < var < 1.2

    def test_fit_satisfies_constraints_on_rough_series(self):
        # Fuzz: even on iid noise the constrained parameterization keeps the
        # MarginalFit invariants satisfiable.
        for seed in range(3):
            x = np.random.default_rng(seed).normal(size=300)
            f = fit_arma_garch(x, n_restarts=1)
            assert abs(f.phi) < 1 and abs(f.theta) < 1
            assert f.alpha0 > 0 and f.alpha1 >= 0 and f.beta >= 0
            assert f.alpha1 + f.beta < 1 and f.nu > 2

    def test_refit_from_optimum_reproduces_loglik(self, recovered_fit):
        refit = fit_arma_garch(
            np.asarray(simulate_arma_garch(T=5000, rng=np.random.default_rng(12345), **TRUE)),
            init=recovered_fit.params,
            n_restarts=0,
        )
        assert refit.loglik >= recovered_fit.loglik - 1e-8
        assert refit.loglik - recovered_fit.loglik < 1e-3


class TestMoments:
    def test_zero_residuals(self):
        f = MarginalFit(mu=0, phi=0, theta=0, alpha0=1e-4, alpha1=0.0, beta=0.0,
                        nu=5.0, residuals=np.zeros(4), loglik=0.0, converged=True)
        assert standardized_residual_moments(f) == (0.0, 0.0)

    def test_plus_minus_one(self):
        f = MarginalFit(mu=0, phi=0, theta=0, alpha0=1e-4, alpha1=0.0, beta=0.0,
                        nu=5.0, residuals=np.array([-1.0, 1.0]), loglik=0.0, converged=True)
        # Population divisor: var of {-1, 1} is exactly 1.
        assert standardized_residual_moments(f) == (0.0, 1.0)


class TestAcf:
    def test_lag_zero_is_one(self):
        vals, _ = acf(np.random.default_rng(0).normal(size=50), 5)
        assert vals[0] == 1.0

    def test_band_half_width(self):
        _, band = acf(np.random.default_rng(0).normal(size=400), 5)
        assert band == pytest.approx(1.96 / 20.0)

    def test_shifted_copy_high_lag_one(self):
        x = np.random.default_rng(1).normal(size=2000)
        y = np.concatenate([x, x])  # x_t strongly predicts x_{t+len}
        smooth = np.cumsum(np.random.default_rng(2).normal(size=3000))
        vals, _ = acf(smooth, 1)
        assert vals[1] > 0.95  # near-perfect lag-1 correlation for a random walk

    def test_iid_noise_within_loose_band(self):
        x = np.random.default_rng(7).normal(size=10_000)
        vals, _ = acf(x, 30)
        assert np.all(np.abs(vals[1:]) < 4.0 / math.sqrt(10_000))

    def test_constant_error(self):
        with pytest.raises(ValueError, match="constant"):
            acf(np.ones(10), 2)


class TestLjungBox:
    def test_formula_matches_hand_evaluation(self):
        x = np.random.default_rng(3).normal(size=100)
        vals, _ = acf(x, 1)
        expected_q = 100 * 102 * vals[1] ** 2 / 99
        score = ljung_box(x, 1)
        assert score.statistic == pytest.approx(expected_q, rel=1e-12)
        assert score.p_value == pytest.approx(stats.chi2.sf(expected_q, 1), rel=1e-12)

    def test_reference_arithmetic(self):
        # T=100, acf(1)=0.3, lag 1: Q = 100*102*0.09/99.
        assert 100 * 102 * 0.3**2 / 99 == pytest.approx(9.272727272727273)

    def test_ar1_strong_rejection(self):
        rng = np.random.default_rng(11)
        x = np.empty(2000)
        x[0] = rng.normal()
        for t in range(1, 2000):
            x[t] = 0.9 * x[t - 1] + rng.normal()
        assert ljung_box(x, 10).p_value < 1e-6

    def test_bad_lag(self):
        with pytest.raises(ValueError):
            ljung_box(np.random.default_rng(0).normal(size=50), 0)

    def test_q_nondecreasing_in_lag(self):
        x = np.random.default_rng(5).normal(size=500)
        qs = [ljung_box(x, lag).statistic for lag in range(1, 11)]
        assert all(b >= a for a, b in zip(qs, qs[1:]))


class TestSerialDependenceOrder:
    def test_single_column(self):
        x = np.random.default_rng(0).normal(size=(300, 1))
        order = serial_dependence_order(x, max_lag=5)
        assert [j for j, _ in order] == [0]

    def test_contaminated_column_first(self):
        rng = np.random.default_rng(21)
        iid = rng.normal(size=500)
        ar = np.empty(500)
        ar[0] = rng.normal()
        for t in range(1, 500):
            ar[t] = 0.6 * ar[t - 1] + rng.normal()
        order = serial_dependence_order(np.column_stack([iid, ar]), max_lag=30)
        assert order[0][0] == 1

    def test_error_carries_column_context(self):
        x = np.column_stack([np.ones(50), np.random.default_rng(0).normal(size=50)])
        with pytest.raises(ValueError, match="column 0"):
            serial_dependence_order(x, max_lag=3)


class TestAndersonDarling:
    def test_single_median_point(self):
        x = scaled_t_quantile(np.array([0.5]), 5.0)
        score = ad_t_statistic(x, 5.0)
        assert score.statistic == pytest.approx(-1.0 + 2.0 * math.log(2.0), abs=1e-12)

    def test_null_statistic_median(self):
        # 400 scaled-t samples: the A^2 median sits near the AD null median
        # (~0.57 asymptotically; generous bracket for Monte Carlo noise).
        rng = np.random.default_rng(9)
        stats_ = []
        for _ in range(400):
            z = rng.standard_t(5.0, size=300) * math.sqrt(3.0 / 5.0)
            stats_.append(ad_t_statistic(z, 5.0).statistic)
        assert 0.4 < np.median(stats_) < 0.8

    def test_extreme_value_clamped_finite(self):
        z = np.array([0.0, 0.1, -0.2, 1e12])  # F(1e12) rounds to 1 without clamping
        score = ad_t_statistic(z, 5.0)
        assert math.isfinite(score.statistic)

    def test_sort_invariance(self):
        rng = np.random.default_rng(4)
        z = rng.standard_t(6.0, size=100)
        a = ad_t_statistic(z, 6.0).statistic
        b = ad_t_statistic(np.sort(z)[::-1], 6.0).statistic
        assert a == b

    def test_pvalue_monotone_in_statistic(self):
        assert ad_pvalue(0.2, 100) > ad_pvalue(1.0, 100) > ad_pvalue(5.0, 100)


class TestScaledT:
    def test_cdf_at_zero(self):
        assert scaled_t_cdf(np.array([0.0]), 7.3)[0] == pytest.approx(0.5)

    def test_quantile_roundtrip(self):
        p = np.linspace(0.01, 0.99, 25)
        for nu in (2.5, 5.0, 30.0):
            q = scaled_t_quantile(p, nu)
            np.testing.assert_allclose(scaled_t_cdf(q, nu), p, atol=1e-12)

    def test_unit_variance(self):
        rng = np.random.default_rng(2)
        nu = 4.0
        z = rng.standard_t(nu, size=200_000) * math.sqrt((nu - 2.0) / nu)
        assert np.var(z) == pytest.approx(1.0, abs=0.05)

    def test_nu_domain(self):
        with pytest.raises(ValueError):
            scaled_t_cdf(np.array([0.0]), 2.0)


class TestQQEnvelope:
    def test_defaults_and_determinism(self):
        a = qq_envelope(5.0, 50, nsim=1000, seed=42)
        b = qq_envelope(5.0, 50, nsim=1000, seed=42)
        assert a.levels == (0.90, 0.95, 0.99)
        for lev in a.levels:
            np.testing.assert_array_equal(a.bands[lev][0], b.bands[lev][0])
            np.testing.assert_array_equal(a.bands[lev][1], b.bands[lev][1])
        np.testing.assert_array_equal(a.lo, b.lo)

    def test_bands_nested(self):
        env = qq_envelope(4.0, 80, nsim=500, seed=1)
        lo90, hi90 = env.bands[0.90]
        lo95, hi95 = env.bands[0.95]
        lo99, hi99 = env.bands[0.99]
        assert np.all(lo99 <= lo95) and np.all(lo95 <= lo90)
        assert np.all(hi90 <= hi95) and np.all(hi95 <= hi99)
        assert np.all(env.lo <= lo99) and np.all(hi99 <= env.hi)

    def test_extreme_order_statistics_wider(self):
        env = qq_envelope(4.0, 101, nsim=500, seed=3)
        lo, hi = env.bands[0.95]
        assert (hi[0] - lo[0]) > (hi[50] - lo[50])
        assert (hi[-1] - lo[-1]) > (hi[50] - lo[50])

    def test_nsim_floor(self):
        with pytest.raises(ValueError, match="nsim"):
            qq_envelope(5.0, 10, nsim=50)
