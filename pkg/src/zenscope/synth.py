"""Seeded synthetic market data: t-copula dependence with GARCH margins.

Every plotting and diagnostics pipeline is runnable without real market
data.  Columns are coupled through a single-parameter t copula, pushed
through per-column ARMA-GARCH marginal dynamics and exponentiated into a
price path.  Optional knobs inject missing cells and one serially
contaminated column (whose de-GARCHed residuals stay autocorrelated).
"""

from __future__ import annotations

import csv
import math
from datetime import date, timedelta

import numpy as np

from .dataset import PriceMatrix, SectorMap
from .dependence import student_t_cdf
from .margins import scaled_t_quantile, simulate_arma_garch

__all__ = ["t_copula_sample", "generate_synthetic", "write_synthetic"]

_SECTOR_NAMES = ("Energy", "Financials", "Technology", "Utilities", "Materials")


def t_copula_sample(P: np.ndarray, nu: float, T: int, rng: np.random.Generator) -> np.ndarray:
    """T x d sample from the t copula with scale matrix P and df nu."""
    P = np.asarray(P, dtype=float)
    L = np.linalg.cholesky(P)
    z = rng.standard_normal((T, P.shape[0])) @ L.T
    w = rng.chisquare(nu, size=T) / nu
    x = z / np.sqrt(w)[:, None]
    u = student_t_cdf(x, nu)
    return np.clip(u, 1e-12, 1.0 - 1e-12)


def _equicorrelation(d: int, rho: float) -> np.ndarray:
    P = np.full((d, d), rho)
    np.fill_diagonal(P, 1.0)
    return P


def generate_synthetic(
    d: int = 10,
    T: int = 1000,
    seed: int = 0,
    copula_rho: float = 0.4,
    copula_nu: float = 5.0,
    margin_nu: float = 6.0,
    missing_frac: float = 0.0,
    contaminated_col: int | None = None,
    n_sectors: int = 3,
) -> tuple[PriceMatrix, SectorMap]:
    """Build a synthetic price panel plus a sector map.

    The contaminated column (if any) feeds AR(1)-correlated innovations to
    its marginal model, so its standardized residuals keep serial
    dependence that Ljung-Box diagnostics should flag first.  Missing
    cells are drawn uniformly over interior rows.
    """
    if d < 2 or T < 2:
        raise ValueError("need at least 2 columns and 2 return rows")
    if not 0.0 <= missing_frac < 1.0:
        raise ValueError("missing_frac must lie in [0, 1)")
    if contaminated_col is not None and not 0 <= contaminated_col < d:
        raise ValueError("contaminated_col out of range")
    rng = np.random.default_rng(seed)
    U = t_copula_sample(_equicorrelation(d, copula_rho), copula_nu, T, rng)
    innov = scaled_t_quantile(U, margin_nu)

    returns = np.empty((T, d))
    for j in range(d):
        zj = innov[:, j]
        if j == contaminated_col:
            # AR(1) filter, rescaled back to unit variance.
            a = 0.6
            zc = np.empty(T)
            zc[0] = zj[0]
            for t in range(1, T):
                zc[t] = a * zc[t - 1] + zj[t]
            zj = zc * math.sqrt(1.0 - a * a)
        returns[:, j] = simulate_arma_garch(
            T,
            mu=5e-4,
            phi=0.05,
            theta=0.03,
            alpha0=5e-6,
            alpha1=0.08,
            beta=0.88,
            nu=margin_nu,
            rng=rng,
            innovations=zj,
        )

    # Negative log-returns X imply S_t = S_{t-1} * exp(-X_t).
    prices = 100.0 * np.exp(np.vstack([np.zeros(d), -np.cumsum(returns, axis=0)]))
    if missing_frac > 0.0:
        n_cells = (T - 1) * d  # interior rows only; endpoints stay present
        k = int(round(missing_frac * n_cells))
        flat = rng.choice(n_cells, size=k, replace=False)
        rows, cols = np.unravel_index(flat, (T - 1, d))
        prices[rows + 1, cols] = np.nan

    start = date(2016, 1, 1)
    dates = tuple((start + timedelta(days=t)).isoformat() for t in range(T + 1))
    tickers = tuple(f"SYN{j:03d}" for j in range(d))
    sector_entries = {
        t: (_SECTOR_NAMES[j % n_sectors], f"Sub{j % (2 * n_sectors)}")
        for j, t in enumerate(tickers)
    }
    return (
        PriceMatrix(dates=dates, tickers=tickers, values=prices),
        SectorMap(entries=sector_entries),
    )


def write_synthetic(prices: PriceMatrix, sectors: SectorMap, prices_path, sectors_path) -> None:
    """Write the panel and sector map in the ingestion CSV formats."""
    with open(prices_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", *prices.tickers])
        for dt, row in zip(prices.dates, prices.values):
            w.writerow([dt, *("" if math.isnan(v) else f"{v:.6f}" for v in row)])
    with open(sectors_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ticker", "sector", "subsector"])
        for t in prices.tickers:
            sec, sub = sectors.entries[t]
            w.writerow([t, sec, sub])
