"""Per-column ARMA(1,1)-GARCH(1,1) fitting and serial/marginal diagnostics.

The marginal model for a return series X_t is

    X_t     = mu_t + sigma_t * Z_t
    mu_t    = mu + phi * (X_{t-1} - mu) + theta * (X_{t-1} - mu_{t-1})
    sigma_t^2 = alpha0 + alpha1 * (X_{t-1} - mu_{t-1})^2 + beta * sigma_{t-1}^2

with iid innovations Z_t following a scaled (unit-variance) t distribution,
F(z) = t_nu(z * sqrt(nu / (nu - 2))).  Fitting is quasi-maximum likelihood
over a constrained-to-unbounded reparameterization, optimized by
Nelder-Mead with random restarts.  Standardized residuals from these fits
feed the copula stages; the diagnostics here (Ljung-Box, Anderson-Darling,
Q-Q envelopes) order zenpaths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit
from scipy import optimize, stats

__all__ = [
    "MarginalFit",
    "DiagnosticScore",
    "QQEnvelope",
    "fit_arma_garch",
    "standardized_residual_moments",
    "simulate_arma_garch",
    "acf",
    "ljung_box",
    "serial_dependence_order",
    "ad_t_statistic",
    "ad_statistic",
    "ad_pvalue",
    "scaled_t_cdf",
    "scaled_t_quantile",
    "qq_envelope",
]

PROB_CLAMP = 1e-16  # probabilities are clamped to [PROB_CLAMP, 1 - PROB_CLAMP]


@dataclass(frozen=True)
class MarginalFit:
    """Fitted ARMA(1,1)-GARCH(1,1) parameters and standardized residuals."""

    mu: float
    phi: float
    theta: float
    alpha0: float
    alpha1: float
    beta: float
    nu: float
    residuals: np.ndarray
    loglik: float
    converged: bool

    def __post_init__(self):
        if not (abs(self.phi) < 1 and abs(self.theta) < 1):
            raise ValueError("ARMA coefficients must lie in (-1, 1)")
        if not (self.alpha0 > 0 and self.alpha1 >= 0 and self.beta >= 0):
            raise ValueError("GARCH coefficients out of range")
        if not self.alpha1 + self.beta < 1:
            raise ValueError("alpha1 + beta must be < 1")
        if not self.nu > 2:
            raise ValueError("innovation degrees of freedom must exceed 2")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.mu, self.phi, self.theta, self.alpha0, self.alpha1, self.beta, self.nu)


@dataclass(frozen=True)
class DiagnosticScore:
    """A test statistic with its (uncorrected, ordering-only) p-value."""

    statistic: float
    p_value: float
    column: int | None = None
    lag: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p_value must lie in [0, 1]")


@dataclass(frozen=True)
class QQEnvelope:
    """Per-order-statistic simulated bands for a scaled-t Q-Q plot."""

    nu_hat: float
    n: int
    nsim: int
    levels: tuple[float, ...]
    bands: dict[float, tuple[np.ndarray, np.ndarray]]
    lo: np.ndarray
    hi: np.ndarray
    seed: int


# ---------------------------------------------------------------------------
# Likelihood filter (numba-compiled; the per-fit hot loop)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _filter_loglik(x, mu, phi, theta, a0, a1, b, nu, xbar, xvar):
    T = x.shape[0]
    s2 = nu / (nu - 2.0)
    const = (
        math.lgamma((nu + 1.0) / 2.0)
        - math.lgamma(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
        + 0.5 * math.log(s2)
    )
    ll = 0.0
    mu_prev = xbar
    eps_prev = 0.0
    sig2 = xvar
    for t in range(T):
        if t == 0:
            mu_t = mu + phi * (xbar - mu)
        else:
            mu_t = mu + phi * (x[t - 1] - mu) + theta * (x[t - 1] - mu_prev)
            sig2 = a0 + a1 * eps_prev * eps_prev + b * sig2
        if sig2 <= 0.0 or not math.isfinite(sig2):
            return -1e300
        eps = x[t] - mu_t
        sig = math.sqrt(sig2)
        z = eps / sig
        ll += const - (nu + 1.0) / 2.0 * math.log1p(z * z * s2 / nu) - math.log(sig)
        mu_prev = mu_t
        eps_prev = eps
    return ll


@njit(cache=True)
def _filter_residuals(x, mu, phi, theta, a0, a1, b, xbar, xvar):
    T = x.shape[0]
    resid = np.empty(T)
    sigma = np.empty(T)
    mu_prev = xbar
    eps_prev = 0.0
    sig2 = xvar
    for t in range(T):
        if t == 0:
            mu_t = mu + phi * (xbar - mu)
        else:
            mu_t = mu + phi * (x[t - 1] - mu) + theta * (x[t - 1] - mu_prev)
            sig2 = a0 + a1 * eps_prev * eps_prev + b * sig2
        eps = x[t] - mu_t
        sigma[t] = math.sqrt(sig2)
        resid[t] = eps / sigma[t]
        mu_prev = mu_t
        eps_prev = eps
    return resid, sigma


# ---------------------------------------------------------------------------
# Parameter transform: constrained <-> unconstrained
# ---------------------------------------------------------------------------


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _logit(p):
    return math.log(p / (1.0 - p))


def _to_natural(u: np.ndarray) -> tuple[float, ...]:
    mu = u[0]
    phi = math.tanh(u[1])
    theta = math.tanh(u[2])
    a0 = math.exp(u[3])
    # alpha1 + beta in (0, 1); the cap and the exact subtraction keep the
    # stationarity constraint satisfied even when the sigmoid saturates.
    total = min(_sigmoid(u[4]), 1.0 - 1e-12)
    frac = _sigmoid(u[5])
    a1 = total * frac
    b = total - a1
    nu = 2.0 + math.exp(u[6])
    return mu, phi, theta, a0, a1, b, nu


def _to_unconstrained(mu, phi, theta, a0, a1, b, nu) -> np.ndarray:
    total = a1 + b
    frac = a1 / total if total > 0 else 0.5
    eps = 1e-10
    return np.array(
        [
            mu,
            math.atanh(np.clip(phi, -1 + eps, 1 - eps)),
            math.atanh(np.clip(theta, -1 + eps, 1 - eps)),
            math.log(max(a0, 1e-300)),
            _logit(np.clip(total, eps, 1 - eps)),
            _logit(np.clip(frac, eps, 1 - eps)),
            math.log(max(nu - 2.0, eps)),
        ]
    )


def fit_arma_garch(
    x: Sequence[float],
    init: tuple[float, ...] | None = None,
    n_restarts: int = 3,
    seed: int = 0,
) -> MarginalFit:
    """Quasi-maximum-likelihood fit of the marginal model to one series.

    Parameters
    ----------
    x : sequence of float
        Return series, length >= 100, non-constant.
    init : optional 7-tuple
        (mu, phi, theta, alpha0, alpha1, beta, nu) starting point.
    n_restarts : int
        Number of random restarts around the starting point.
    seed : int
        Seed for the restart perturbations (fits are deterministic).
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 1 or x.size < 100:
        raise ValueError("series must be one-dimensional with length >= 100")
    if np.ptp(x) == 0.0:
        raise ValueError("series is constant")
    xbar = float(x.mean())
    xvar = float(x.var())

    if init is None:
        init = (xbar, 0.05, 0.05, 0.05 * xvar, 0.05, 0.90, 8.0)
    u0 = _to_unconstrained(*init)

    def neg_ll(u):
        mu, phi, theta, a0, a1, b, nu = _to_natural(u)
        return -_filter_loglik(x, mu, phi, theta, a0, a1, b, nu, xbar, xvar)

    rng = np.random.default_rng(seed)
    starts = [u0] + [u0 + rng.normal(scale=0.5, size=7) for _ in range(n_restarts)]
    best = None
    any_success = False
    for u_start in starts:
        res = optimize.minimize(
            neg_ll,
            u_start,
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-7, "fatol": 1e-9},
        )
        if best is None or res.fun < best.fun:
            best = res
        any_success = any_success or bool(res.success)

    if best is None or not np.isfinite(best.fun):
        raise RuntimeError("optimizer failed on every restart")

    mu, phi, theta, a0, a1, b, nu = _to_natural(best.x)
    resid, _ = _filter_residuals(x, mu, phi, theta, a0, a1, b, xbar, xvar)
    return MarginalFit(
        mu=mu,
        phi=phi,
        theta=theta,
        alpha0=a0,
        alpha1=a1,
        beta=b,
        nu=nu,
        residuals=resid,
        loglik=-float(best.fun),
        converged=any_success,
    )


def standardized_residual_moments(fit: MarginalFit) -> tuple[float, float]:
    """Sample mean and population-divisor variance of the residuals."""
    r = fit.residuals
    return float(r.mean()), float(r.var())


def simulate_arma_garch(
    T: int,
    mu: float,
    phi: float,
    theta: float,
    alpha0: float,
    alpha1: float,
    beta: float,
    nu: float,
    rng: np.random.Generator,
    burn: int = 500,
    innovations: np.ndarray | None = None,
) -> np.ndarray:
    """Simulate the marginal model, discarding ``burn`` warm-up steps.

    ``innovations`` may supply pre-generated standardized innovations of
    length T (the burn-in then draws its own), which is how copula-coupled
    multivariate samples are built.
    """
    n = T + burn
    z = rng.standard_t(nu, size=n) * math.sqrt((nu - 2.0) / nu)
    if innovations is not None:
        if len(innovations) != T:
            raise ValueError("innovations must have length T")
        z[burn:] = innovations
    x = np.empty(n)
    mu_prev = mu
    eps_prev = 0.0
    sig2 = alpha0 / (1.0 - alpha1 - beta)
    x_prev = mu
    for t in range(n):
        mu_t = mu + phi * (x_prev - mu) + theta * (x_prev - mu_prev)
        if t > 0:
            sig2 = alpha0 + alpha1 * eps_prev * eps_prev + beta * sig2
        eps = math.sqrt(sig2) * z[t]
        x[t] = mu_t + eps
        mu_prev = mu_t
        eps_prev = eps
        x_prev = x[t]
    return x[burn:]


# ---------------------------------------------------------------------------
# Serial-dependence diagnostics
# ---------------------------------------------------------------------------


def acf(x: Sequence[float], max_lag: int) -> tuple[np.ndarray, float]:
    """Sample autocorrelations for lags 0..max_lag and the 1.96/sqrt(T) band."""
    x = np.asarray(x, dtype=float)
    T = x.size
    if not 0 < max_lag < T:
        raise ValueError("max_lag must satisfy 0 < max_lag < len(x)")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise ValueError("series is constant; autocorrelation undefined")
    vals = np.empty(max_lag + 1)
    vals[0] = 1.0
    for k in range(1, max_lag + 1):
        vals[k] = float(xc[k:] @ xc[:-k]) / denom
    band = 1.96 / math.sqrt(T)
    return vals, band


def ljung_box(x: Sequence[float], lag: int) -> DiagnosticScore:
    """Ljung-Box portmanteau test at the given lag."""
    if lag <= 0:
        raise ValueError("lag must be positive")
    x = np.asarray(x, dtype=float)
    T = x.size
    rho, _ = acf(x, lag)
    ks = np.arange(1, lag + 1)
    q = T * (T + 2.0) * float(np.sum(rho[1:] ** 2 / (T - ks)))
    p = float(stats.chi2.sf(q, df=lag))
    return DiagnosticScore(statistic=q, p_value=p, lag=lag)


def serial_dependence_order(
    residuals: np.ndarray, max_lag: int = 30, squared: bool = False
) -> list[tuple[int, float]]:
    """Order columns by ascending minimum Ljung-Box p-value over lags 1..max_lag."""
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    residuals = np.asarray(residuals, dtype=float)
    scores = []
    for j in range(residuals.shape[1]):
        col = residuals[:, j] ** 2 if squared else residuals[:, j]
        try:
            min_p = min(ljung_box(col, lag).p_value for lag in range(1, max_lag + 1))
        except ValueError as exc:
            raise ValueError(f"column {j}: {exc}") from exc
        scores.append((j, min_p))
    return sorted(scores, key=lambda s: (s[1], s[0]))


# ---------------------------------------------------------------------------
# Marginal-distribution diagnostics
# ---------------------------------------------------------------------------


def scaled_t_cdf(x, nu: float):
    """CDF of the unit-variance scaled t distribution, t_nu(x*sqrt(nu/(nu-2)))."""
    if nu <= 2:
        raise ValueError("nu must exceed 2 for the scaled t distribution")
    from .dependence import student_t_cdf

    return student_t_cdf(np.asarray(x, dtype=float) * math.sqrt(nu / (nu - 2.0)), nu)


def scaled_t_quantile(p, nu: float):
    """Quantile of the unit-variance scaled t distribution."""
    if nu <= 2:
        raise ValueError("nu must exceed 2 for the scaled t distribution")
    from .dependence import student_t_quantile

    return student_t_quantile(p, nu) * math.sqrt((nu - 2.0) / nu)


def ad_statistic(probs: np.ndarray) -> float:
    """Anderson-Darling A^2 from probability-integral-transformed data.

    ``probs`` are F(x_i) for the hypothesized F; they are sorted here and
    clamped away from {0, 1} so the statistic is always finite.
    """
    u = np.sort(np.clip(np.asarray(probs, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP))
    n = u.size
    if n == 0:
        raise ValueError("empty sample")
    i = np.arange(1, n + 1)
    return float(-n - np.mean((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))))


def _adinf(z: float) -> float:
    """Asymptotic CDF of the Anderson-Darling statistic (Marsaglia form)."""
    if z <= 0.0:
        return 0.0
    if z < 2.0:
        return (
            math.exp(-1.2337141 / z)
            / math.sqrt(z)
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.0116720 - 0.00168691 * z) * z) * z) * z) * z)
        )
    return math.exp(
        -math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
    )


def _ad_errfix(n: int, x: float) -> float:
    """Finite-sample correction to the asymptotic AD CDF."""
    if x > 0.8:
        return (
            -130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x
        ) / n
    c = 0.01265 + 0.1757 / n
    if x < c:
        t = x / c
        t = math.sqrt(t) * (1.0 - t) * (49.0 * t - 102.0)
        return t * (0.0037 / n**3 + 0.00078 / n**2 + 0.00006 / n)
    t = (x - c) / (0.8 - c)
    t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t
    return t * (0.04213 + 0.01365 / n) / n


def ad_pvalue(a2: float, n: int) -> float:
    """Upper-tail p-value of A^2 with finite-sample correction."""
    cdf = _adinf(a2)
    cdf = min(max(cdf + _ad_errfix(n, cdf), 0.0), 1.0)
    return 1.0 - cdf


def ad_t_statistic(residuals: Sequence[float], nu_hat: float) -> DiagnosticScore:
    """Anderson-Darling test of residuals against the scaled t with nu_hat df."""
    if nu_hat <= 2:
        raise ValueError("nu_hat must exceed 2")
    r = np.asarray(residuals, dtype=float)
    a2 = ad_statistic(scaled_t_cdf(r, nu_hat))
    return DiagnosticScore(statistic=a2, p_value=ad_pvalue(a2, r.size))


def qq_envelope(
    nu_hat: float,
    n: int,
    nsim: int = 1000,
    levels: Sequence[float] = (0.90, 0.95, 0.99),
    seed: int = 0,
) -> QQEnvelope:
    """Simulated pointwise confidence bands for a scaled-t Q-Q plot.

    ``nsim`` samples of size ``n`` are drawn from the scaled t with
    ``nu_hat`` degrees of freedom; per order statistic the bands hold the
    central ``levels`` quantiles plus the overall min/max.  Deterministic
    for a fixed seed.
    """
    if nsim < 100:
        raise ValueError("nsim must be at least 100")
    if nu_hat <= 2:
        raise ValueError("nu_hat must exceed 2")
    rng = np.random.default_rng(seed)
    sims = rng.standard_t(nu_hat, size=(nsim, n)) * math.sqrt((nu_hat - 2.0) / nu_hat)
    sims.sort(axis=1)
    bands: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for lev in levels:
        half = (1.0 - lev) / 2.0
        lo = np.quantile(sims, half, axis=0)
        hi = np.quantile(sims, 1.0 - half, axis=0)
        bands[lev] = (lo, hi)
    return QQEnvelope(
        nu_hat=nu_hat,
        n=n,
        nsim=nsim,
        levels=tuple(levels),
        bands=bands,
        lo=sims.min(axis=0),
        hi=sims.max(axis=0),
        seed=seed,
    )
