"""Price ingestion, missing-value repair, completeness filtering and returns.

Prices are carried as a ``PriceMatrix`` whose grid uses NaN as the missing
marker.  Dates are ISO-8601 labels only; no calendar arithmetic is done.
All functions are pure: they return new objects and never mutate inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

__all__ = [
    "PriceMatrix",
    "ReturnMatrix",
    "SectorMap",
    "load_prices",
    "load_sectors",
    "filter_by_completeness",
    "fill_missing",
    "neg_log_returns",
]

_MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class PriceMatrix:
    """(T+1) x d grid of positive prices with NaN missing markers."""

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("values shape does not match dates/tickers")
        if len(set(self.tickers)) != len(self.tickers):
            raise ValueError("tickers must be unique")
        with np.errstate(invalid="ignore"):
            if np.any(v[~np.isnan(v)] <= 0.0):
                raise ValueError("all present prices must be positive")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise ValueError(f"dates not strictly increasing at {b!r}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def missing_fraction(self) -> np.ndarray:
        """Per-column fraction of missing cells."""
        return np.isnan(self.values).mean(axis=0)


@dataclass(frozen=True)
class ReturnMatrix:
    """T x d grid of negative log-returns; no missing values allowed."""

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("values shape does not match dates/tickers")
        if np.any(np.isnan(v)):
            raise ValueError("return matrix may not contain missing values")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SectorMap:
    """Ticker -> (sector, subsector) lookup used by pair filters."""

    entries: dict[str, tuple[str, str]] = field(default_factory=dict)

    def sector(self, ticker: str) -> str:
        try:
            return self.entries[ticker][0]
        except KeyError:
            raise KeyError(f"ticker {ticker!r} has no sector mapping") from None

    def subsector(self, ticker: str) -> str:
        return self.entries[ticker][1]

    def __contains__(self, ticker: str) -> bool:
        return ticker in self.entries


def _parse_iso_date(token: str, row: int) -> str:
    try:
        date.fromisoformat(token)
    except ValueError:
        raise ValueError(f"row {row}: {token!r} is not an ISO-8601 date") from None
    return token


def load_prices(path) -> PriceMatrix:
    """Read a price CSV with header ``date,<ticker1>,<ticker2>,...``.

    Empty cells and the literal ``NA`` (case-sensitive) become missing
    markers; any other unparseable cell is an error naming its row and
    column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = (rec for rec in csv.reader(fh) if not (rec and rec[0].startswith("#")))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty file: no header row") from None
        if not header or header[0] != "date":
            raise ValueError("first header column must be 'date'")
        tickers = tuple(header[1:])
        if not tickers:
            raise ValueError("no ticker columns in header")
        seen = set()
        for t in tickers:
            if t in seen:
                raise ValueError(f"duplicate ticker {t!r}")
            seen.add(t)

        dates: list[str] = []
        rows: list[list[float]] = []
        for i, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(tickers) + 1:
                raise ValueError(f"row {i}: expected {len(tickers) + 1} cells, got {len(rec)}")
            dates.append(_parse_iso_date(rec[0], i))
            vals = []
            for t, cell in zip(tickers, rec[1:]):
                if cell in _MISSING_TOKENS:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"unparseable cell {cell!r} at row {i}, column {t!r}"
                    ) from None
            rows.append(vals)

    if not rows:
        raise ValueError("no observations")
    order = sorted(range(len(dates)), key=lambda k: dates[k])
    dates_sorted = tuple(dates[k] for k in order)
    values = np.asarray(rows, dtype=float)[order]
    return PriceMatrix(dates=dates_sorted, tickers=tickers, values=values)


def load_sectors(path) -> SectorMap:
    """Read a sector CSV with header ``ticker,sector,subsector``."""
    entries: dict[str, tuple[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = (rec for rec in csv.reader(fh) if not (rec and rec[0].startswith("#")))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["ticker", "sector", "subsector"]:
            raise ValueError("sector file header must be 'ticker,sector,subsector'")
        for i, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) < 3:
                raise ValueError(f"row {i}: expected 3 cells")
            ticker, sector, subsector = rec[0], rec[1], rec[2]
            if ticker in entries:
                raise ValueError(f"duplicate ticker {ticker!r} in sector file")
            entries[ticker] = (sector, subsector)
    return SectorMap(entries=entries)


def filter_by_completeness(p: PriceMatrix, max_missing_frac: float) -> PriceMatrix:
    """Keep columns whose missing fraction is at most ``max_missing_frac``."""
    if not 0.0 <= max_missing_frac <= 1.0:
        raise ValueError("max_missing_frac must lie in [0, 1]")
    frac = p.missing_fraction()
    keep = np.flatnonzero(frac <= max_missing_frac)
    if keep.size == 0:
        raise ValueError("no columns remain after completeness filter")
    return PriceMatrix(
        dates=p.dates,
        tickers=tuple(p.tickers[j] for j in keep),
        values=p.values[:, keep],
    )


def fill_missing(p: PriceMatrix) -> PriceMatrix:
    """Repair missing cells column by column.

    Interior gaps are linearly interpolated in row-index space; leading and
    trailing gaps repeat the nearest present value.  Present values are
    never altered, which makes the operation idempotent.
    """
    values = p.values.copy()
    idx = np.arange(p.n_rows)
    for j, ticker in enumerate(p.tickers):
        col = values[:, j]
        present = ~np.isnan(col)
        if not present.any():
            raise ValueError(f"column {ticker!r} is entirely missing")
        if present.all():
            continue
        # np.interp repeats edge values outside the observed range.
        values[:, j] = np.interp(idx, idx[present], col[present])
    return PriceMatrix(dates=p.dates, tickers=p.tickers, values=values)


def neg_log_returns(p: PriceMatrix) -> ReturnMatrix:
    """Negative log-returns -log(S_t / S_{t-1}); losses come out positive."""
    if np.any(np.isnan(p.values)):
        raise ValueError("price matrix has missing values; run fill_missing first")
    if p.n_rows < 2:
        raise ValueError("at least 2 price rows are required")
    values = -np.log(p.values[1:] / p.values[:-1])
    return ReturnMatrix(dates=p.dates[1:], tickers=p.tickers, values=values)
