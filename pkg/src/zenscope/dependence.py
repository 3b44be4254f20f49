"""Pseudo-observations, concordance measures and t-copula estimation.

Everything here operates on the copula scale: columnwise ranks divided by
T+1 keep all entries strictly inside (0, 1).  Pairwise measures (Kendall's
tau, Spearman's rho, parametric and nonparametric upper tail dependence)
assemble into a symmetric dependence matrix, optionally in parallel; the
result is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

__all__ = [
    "PseudoObsMatrix",
    "BivTCopulaFit",
    "JointTCopulaFit",
    "DependenceMatrix",
    "pseudo_observations",
    "kendall_tau",
    "spearman_rho",
    "student_t_cdf",
    "student_t_quantile",
    "lambda_from_rho_nu",
    "fit_biv_t",
    "lambda_nonparam",
    "dependence_matrix",
    "fit_joint_t",
    "lambda_matrix_from_joint",
    "nearest_psd_correlation",
]

NU_LOWER = 1.0
NU_UPPER = 300.0


@dataclass(frozen=True)
class PseudoObsMatrix:
    """T x d matrix of rank-based pseudo-observations in (0, 1)."""

    values: np.ndarray
    tickers: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            raise ValueError("pseudo-observations must lie strictly in (0, 1)")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BivTCopulaFit:
    """Bivariate t copula: tau-inverted correlation, profile-likelihood df."""

    rho: float
    nu: float
    tau_hat: float
    loglik: float
    lambda_: float
    nu_at_bound: bool = False

    def __post_init__(self):
        if abs(self.lambda_ - lambda_from_rho_nu(self.rho, self.nu)) > 1e-12:
            raise ValueError("lambda inconsistent with (rho, nu)")


@dataclass(frozen=True)
class JointTCopulaFit:
    """Joint t copula: PSD-projected tau-inverted scale matrix, single df."""

    P: np.ndarray
    nu: float
    loglik: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        if not np.allclose(P, P.T, atol=1e-12):
            raise ValueError("P must be symmetric")
        if not np.allclose(np.diag(P), 1.0, atol=1e-12):
            raise ValueError("P must have unit diagonal")
        if np.linalg.eigvalsh(P).min() < -1e-10:
            raise ValueError("P must be positive semidefinite")


@dataclass(frozen=True)
class DependenceMatrix:
    """Symmetric d x d matrix of one pairwise dependence measure."""

    measure: str
    values: np.ndarray
    tickers: tuple[str, ...]
    aux: np.ndarray | None = None  # per-pair nu for lambda_t
    failures: tuple[tuple[int, int, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("values must be a square matrix")
        finite = np.isfinite(v)
        if not np.array_equal(v[finite & finite.T], v.T[finite & finite.T]):
            raise ValueError("values must be symmetric")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Ranks and concordance
# ---------------------------------------------------------------------------


def pseudo_observations(z: np.ndarray, tickers=None) -> PseudoObsMatrix:
    """Columnwise average ranks scaled by 1/(T+1)."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    T = z.shape[0]
    if T < 2:
        raise ValueError("need at least 2 rows")
    ranks = np.apply_along_axis(stats.rankdata, 0, z)
    if tickers is None:
        tickers = tuple(f"V{j + 1}" for j in range(z.shape[1]))
    return PseudoObsMatrix(values=ranks / (T + 1.0), tickers=tuple(tickers))


def _count_inversions(a: np.ndarray) -> tuple[np.ndarray, int]:
    """Merge-count of pairs (i < j) with a[i] > a[j]; ties are not counted."""
    n = a.size
    if n <= 1:
        return a, 0
    mid = n // 2
    left, cl = _count_inversions(a[:mid])
    right, cr = _count_inversions(a[mid:])
    # For each right element, left elements strictly greater than it invert.
    pos = np.searchsorted(left, right, side="right")
    cross = int(left.size) * int(right.size) - int(pos.sum())
    merged = np.concatenate([left, right])
    merged.sort(kind="mergesort")
    return merged, cl + cr + cross


def _tie_pair_count(sorted_vals: np.ndarray) -> int:
    """Number of tied pairs in a sorted array."""
    _, counts = np.unique(sorted_vals, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def kendall_tau(u, v) -> float:
    """Tie-corrected Kendall's tau-b via O(n log n) inversion counting."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D arrays")
    n = u.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    perm = np.lexsort((v, u))
    x = u[perm]
    y = v[perm]
    n0 = n * (n - 1) // 2
    n1 = _tie_pair_count(x)
    n2 = _tie_pair_count(np.sort(v))
    if n1 == n0 or n2 == n0:
        raise ValueError("constant input: tau undefined")
    # Joint ties: pairs tied in both coordinates.
    xy = np.rec.fromarrays([x, y])
    _, joint_counts = np.unique(xy, return_counts=True)
    n3 = int((joint_counts * (joint_counts - 1) // 2).sum())
    _, swaps = _count_inversions(y)
    numerator = n0 - n1 - n2 + n3 - 2 * swaps
    return numerator / math.sqrt((n0 - n1) * (n0 - n2))


def spearman_rho(u, v) -> float:
    """Pearson correlation of average ranks."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D arrays")
    ru = stats.rankdata(u)
    rv = stats.rankdata(v)
    if np.ptp(ru) == 0 or np.ptp(rv) == 0:
        raise ValueError("constant input: rho undefined")
    ru -= ru.mean()
    rv -= rv.mean()
    return float(ru @ rv / math.sqrt((ru @ ru) * (rv @ rv)))


# ---------------------------------------------------------------------------
# Student t distribution
# ---------------------------------------------------------------------------


def student_t_cdf(x, nu: float):
    """Student t CDF via the regularized incomplete beta function."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    x = np.asarray(x, dtype=float)
    out = special.stdtr(nu, x)
    return float(out) if out.ndim == 0 else out


def _student_t_logpdf(x, nu: float):
    x = np.asarray(x, dtype=float)
    c = special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0) - 0.5 * math.log(nu * math.pi)
    return c - (nu + 1.0) / 2.0 * np.log1p(x * x / nu)


def student_t_quantile(p, nu: float):
    """Student t quantile, Newton-polished so |CDF(q(p)) - p| < 1e-12."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probabilities must lie strictly in (0, 1)")
    x = special.stdtrit(nu, p)
    for _ in range(3):
        err = special.stdtr(nu, x) - p
        if np.all(np.abs(err) < 1e-13):
            break
        x = x - err / np.exp(_student_t_logpdf(x, nu))
    return float(x) if x.ndim == 0 else x


def lambda_from_rho_nu(rho: float, nu: float) -> float:
    """Upper tail dependence of a bivariate t copula.

    lambda = 2 * t_{nu+1}( -sqrt((nu + 1)(1 - rho) / (1 + rho)) );
    rho = 1 returns exactly 1 and rho = -1 returns 0 (the limit).
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if rho < -1.0 or rho > 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    if rho == 1.0:
        return 1.0
    if rho == -1.0:
        return 0.0
    arg = -math.sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho))
    return 2.0 * student_t_cdf(arg, nu + 1.0)


# ---------------------------------------------------------------------------
# Copula fitting
# ---------------------------------------------------------------------------


def _golden_section(f, lo: float, hi: float, tol: float = 1e-4):
    """Minimize a unimodal scalar function on [lo, hi]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _biv_t_loglik(x1: np.ndarray, x2: np.ndarray, rho: float, nu: float) -> float:
    """Bivariate t copula log-density sum at t-quantile-transformed points."""
    one_m = 1.0 - rho * rho
    q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / one_m
    const = (
        special.gammaln((nu + 2.0) / 2.0)
        + special.gammaln(nu / 2.0)
        - 2.0 * special.gammaln((nu + 1.0) / 2.0)
        - 0.5 * math.log(one_m)
    )
    n = x1.size
    ll = n * const
    ll -= (nu + 2.0) / 2.0 * float(np.sum(np.log1p(q / nu)))
    ll += (nu + 1.0) / 2.0 * float(np.sum(np.log1p(x1 * x1 / nu) + np.log1p(x2 * x2 / nu)))
    return ll


def fit_biv_t(u1, u2) -> BivTCopulaFit:
    """Fit a bivariate t copula: rho by tau inversion, nu by profile likelihood.

    rho = sin(pi * tau / 2) from the sample Kendall's tau; nu maximizes the
    rho-fixed log-pseudo-likelihood over log-nu in [log 1, log 300] by
    golden-section search.  Hitting a nu bound sets ``nu_at_bound``.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.size != u2.size or u1.size < 30:
        raise ValueError("need paired samples with at least 30 rows")
    tau = kendall_tau(u1, u2)
    if abs(tau) >= 1.0:
        raise ValueError("|tau| = 1: degenerate copula")
    rho = math.sin(math.pi * tau / 2.0)

    def neg_profile(log_nu: float) -> float:
        nu = math.exp(log_nu)
        x1 = student_t_quantile(u1, nu)
        x2 = student_t_quantile(u2, nu)
        return -_biv_t_loglik(x1, x2, rho, nu)

    log_nu, neg_ll = _golden_section(neg_profile, math.log(NU_LOWER), math.log(NU_UPPER))
    nu = math.exp(log_nu)
    at_bound = nu <= NU_LOWER * 1.01 or nu >= NU_UPPER * 0.99
    return BivTCopulaFit(
        rho=rho,
        nu=nu,
        tau_hat=tau,
        loglik=-neg_ll,
        lambda_=lambda_from_rho_nu(rho, nu),
        nu_at_bound=at_bound,
    )


def lambda_nonparam(u1, u2, p: float = 0.1) -> float:
    """Nonparametric upper tail dependence via corner conditional Spearman's rho.

    On the survival scale (U -> 1-U) the statistic
    A = mean((p - U1)^+ (p - U2)^+) is normalized so that independence maps
    to 0 and comonotonicity to 1 on the [0, p]^2 corner; the default p = 0.1
    conditions on both variables exceeding their 90% quantiles.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError("p must lie in (0, 0.5]")
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    s1 = 1.0 - u1
    s2 = 1.0 - u2
    in_corner = (s1 < p) & (s2 < p)
    if int(in_corner.sum()) < 10:
        raise ValueError("insufficient corner mass")
    a = float(np.mean(np.clip(p - s1, 0.0, None) * np.clip(p - s2, 0.0, None)))
    indep = p**4 / 4.0
    comon = p**3 / 3.0
    return float(np.clip((a - indep) / (comon - indep), 0.0, 1.0))


def _pair_value(measure: str, u1: np.ndarray, u2: np.ndarray) -> tuple[float, float]:
    """Compute one off-diagonal entry; returns (value, aux)."""
    if measure == "tau":
        return kendall_tau(u1, u2), math.nan
    if measure == "rho_s":
        return spearman_rho(u1, u2), math.nan
    if measure == "lambda_t":
        fit = fit_biv_t(u1, u2)
        return fit.lambda_, fit.nu
    if measure == "lambda_emp":
        return lambda_nonparam(u1, u2), math.nan
    raise ValueError(f"unknown measure {measure!r}")


def dependence_matrix(
    U: PseudoObsMatrix, measure: str = "tau", parallelism: int = 1
) -> DependenceMatrix:
    """Pairwise dependence over all unordered pairs of columns.

    Per-pair failures become NaN entries with a recorded reason rather than
    aborting the run.  Results do not depend on the worker count.
    """
    if measure not in ("tau", "rho_s", "lambda_t", "lambda_emp"):
        raise ValueError(f"unknown measure {measure!r}")
    d = U.n_cols
    if d < 2:
        raise ValueError("need at least 2 columns")
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    vals = np.full((d, d), np.nan)
    np.fill_diagonal(vals, 1.0)
    aux = np.full((d, d), np.nan)
    failures: list[tuple[int, int, str]] = []

    def work(pair):
        i, j = pair
        try:
            return pair, _pair_value(measure, U.values[:, i], U.values[:, j]), None
        except Exception as exc:  # long-batch robustness: record, keep going
            return pair, None, str(exc)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(p) for p in pairs]

    for (i, j), value, err in results:
        if err is not None:
            failures.append((i, j, err))
            continue
        v, a = value
        vals[i, j] = vals[j, i] = v
        aux[i, j] = aux[j, i] = a

    return DependenceMatrix(
        measure=measure,
        values=vals,
        tickers=U.tickers,
        aux=aux if measure == "lambda_t" else None,
        failures=tuple(failures),
    )


def nearest_psd_correlation(P: np.ndarray, eig_floor: float = 1e-8) -> np.ndarray:
    """Project to the nearest positive-semidefinite correlation matrix.

    Eigenvalues are clipped at ``eig_floor``, the result symmetrized and
    rescaled to unit diagonal.  A matrix already PSD is returned unchanged.
    """
    P = np.asarray(P, dtype=float)
    P = (P + P.T) / 2.0
    w, V = np.linalg.eigh(P)
    if w.min() >= eig_floor:
        return P
    w_clipped = np.clip(w, eig_floor, None)
    A = (V * w_clipped) @ V.T
    A = (A + A.T) / 2.0
    if not np.all(np.isfinite(A)):
        raise ValueError("PSD projection produced non-finite entries")
    s = 1.0 / np.sqrt(np.diag(A))
    A = A * np.outer(s, s)
    np.fill_diagonal(A, 1.0)
    return (A + A.T) / 2.0


def _joint_t_loglik(U: np.ndarray, P: np.ndarray, nu: float) -> float:
    """Joint t copula log-likelihood via a Cholesky factor of P."""
    d = P.shape[0]
    L = np.linalg.cholesky(P)
    X = student_t_quantile(U, nu)
    sol = np.linalg.solve(L, X.T)
    q = np.sum(sol * sol, axis=0)
    logdet = float(np.sum(np.log(np.diag(L))))
    n = U.shape[0]
    const = (
        special.gammaln((nu + d) / 2.0)
        + (d - 1.0) * special.gammaln(nu / 2.0)
        - d * special.gammaln((nu + 1.0) / 2.0)
        - logdet
    )
    ll = n * const
    ll -= (nu + d) / 2.0 * float(np.sum(np.log1p(q / nu)))
    ll += (nu + 1.0) / 2.0 * float(np.sum(np.log1p(X * X / nu)))
    return ll


def fit_joint_t(U: PseudoObsMatrix) -> JointTCopulaFit:
    """Fit a d-dimensional t copula: tau-inverted scale matrix, single df.

    P comes from pairwise Kendall-tau inversion projected to the nearest
    PSD correlation matrix; nu maximizes the joint log-pseudo-likelihood by
    golden-section search on log-nu over [log 1, log 300].
    """
    d = U.n_cols
    if d < 2:
        raise ValueError("need at least 2 columns")
    P0 = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            tau = kendall_tau(U.values[:, i], U.values[:, j])
            P0[i, j] = P0[j, i] = math.sin(math.pi * tau / 2.0)
    P = nearest_psd_correlation(P0)

    def neg_ll(log_nu: float) -> float:
        return -_joint_t_loglik(U.values, P, math.exp(log_nu))

    log_nu, neg = _golden_section(neg_ll, math.log(NU_LOWER), math.log(NU_UPPER))
    return JointTCopulaFit(P=P, nu=math.exp(log_nu), loglik=-neg)


def lambda_matrix_from_joint(fit: JointTCopulaFit, tickers=None) -> DependenceMatrix:
    """Implied upper tail-dependence matrix of a joint t copula fit."""
    d = fit.P.shape[0]
    vals = np.eye(d)
    aux = np.full((d, d), fit.nu)
    for i in range(d):
        for j in range(i + 1, d):
            vals[i, j] = vals[j, i] = lambda_from_rho_nu(float(fit.P[i, j]), fit.nu)
    if tickers is None:
        tickers = tuple(f"V{j + 1}" for j in range(d))
    return DependenceMatrix(measure="lambda_t", values=vals, tickers=tuple(tickers), aux=aux)
