"""Command-line pipeline: data -> margins -> dependence -> paths -> plots.

Each subcommand reads file artifacts produced by the previous stage and
writes stamped JSON/CSV/SVG artifacts, so long runs can resume stage by
stage.  ``pipeline`` chains everything on one dataset.  Exit codes:
0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts, synth
from .dataset import (
    ReturnMatrix,
    SectorMap,
    fill_missing,
    filter_by_completeness,
    load_prices,
    load_sectors,
    neg_log_returns,
)
from .dependence import (
    DependenceMatrix,
    dependence_matrix,
    fit_biv_t,
    fit_joint_t,
    pseudo_observations,
)
from .gof import PairGofReport, compare_models
from .margins import (
    MarginalFit,
    acf,
    ad_t_statistic,
    fit_arma_garch,
    qq_envelope,
    serial_dependence_order,
)
from .zenpath import PairList, Zenpath, connect_pairs, extreme_pairs, per_sector_paths, rank_pairs
from .zenplot import acf_panel, layout, qq_panel, render, scatter_panel

__all__ = ["PipelineConfig", "main"]

_MEASURES = {"tau": "tau", "rho": "rho_s", "lambda-t": "lambda_t", "lambda-emp": "lambda_emp"}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings for a full pipeline run."""

    prices: str | None
    sectors: str | None
    max_missing: float
    measure: str
    order: str
    top: int
    bottom: int
    sector_mode: str
    width: int
    panel: str
    seed: int
    threads: int
    out_dir: str


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are user errors (exit 1)
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Artifact round-tripping
# ---------------------------------------------------------------------------


def _args_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    # Stage-input paths living inside the output directory are plumbing, not
    # configuration: hash their names relative to out_dir so runs that differ
    # only in destination stay byte-identical.
    out_dir = str(Path(cfg.get("out_dir", ".")).resolve())
    for k, v in cfg.items():
        if isinstance(v, str) and str(Path(v).resolve()).startswith(out_dir + "/"):
            cfg[k] = str(Path(v).resolve().relative_to(out_dir))
    cfg["command"] = args.func.__name__
    return cfg


def _stamp(args) -> dict:
    return artifacts.make_stamp(getattr(args, "seed", None), _args_config(args))


def _read_matrix_csv(path) -> ReturnMatrix:
    """Read a stamped `date,<tickers>` matrix of floats (no missing cells)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = (rec for rec in csv.reader(fh) if not (rec and rec[0].startswith("#")))
        header = next(reader, None)
        if header is None or header[0] != "date":
            raise ValueError(f"{path}: expected header 'date,<tickers>'")
        tickers = tuple(header[1:])
        dates, rows = [], []
        for rec in reader:
            if not rec:
                continue
            dates.append(rec[0])
            rows.append([float(c) for c in rec[1:]])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return ReturnMatrix(dates=tuple(dates), tickers=tickers, values=np.asarray(rows))


def _write_matrix_csv(path, m: ReturnMatrix, stamp: dict) -> None:
    rows = ([dt, *(repr(float(v)) for v in row)] for dt, row in zip(m.dates, m.values))
    artifacts.write_csv(path, ["date", *m.tickers], rows, stamp)


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_depmat(path) -> DependenceMatrix:
    doc = _read_json(path)
    tickers = tuple(doc["tickers"])
    d = len(tickers)
    values = np.eye(d)
    aux = None if doc.get("aux") is None else np.full((d, d), math.nan)
    k = 0
    for i in range(1, d):
        for j in range(i):
            v = doc["values"][k]
            values[i, j] = values[j, i] = math.nan if v is None else v
            if aux is not None:
                a = doc["aux"][k]
                aux[i, j] = aux[j, i] = math.nan if a is None else a
            k += 1
    failures = tuple((f[0], f[1], f[2]) for f in doc.get("failures", []))
    return DependenceMatrix(
        measure=doc["measure"], values=values, tickers=tickers, aux=aux, failures=failures
    )


def _fit_nu_by_ticker(path) -> dict[str, float]:
    return {f["ticker"]: f["nu"] for f in _read_json(path)["fits"]}


def _out(args, name: str) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    prices, sectors = synth.generate_synthetic(
        d=args.d,
        T=args.T,
        seed=args.seed,
        missing_frac=args.missing_frac,
        contaminated_col=args.contaminate,
    )
    synth.write_synthetic(prices, sectors, _out(args, "prices.csv"), _out(args, "sectors.csv"))
    print(f"wrote {_out(args, 'prices.csv')} and {_out(args, 'sectors.csv')}")
    return 0


def cmd_ingest(args) -> int:
    prices = load_prices(args.prices)
    if args.sectors:
        load_sectors(args.sectors)  # validated here, consumed by later stages
    prices = filter_by_completeness(prices, args.max_missing)
    prices = fill_missing(prices)
    returns = neg_log_returns(prices)
    _write_matrix_csv(_out(args, "returns.csv"), returns, _stamp(args))
    print(f"wrote {_out(args, 'returns.csv')} ({returns.n_rows} x {returns.n_cols})")
    return 0


def cmd_degarch(args) -> int:
    returns = _read_matrix_csv(args.returns)

    def fit_col(j: int) -> MarginalFit:
        return fit_arma_garch(returns.values[:, j], seed=args.seed)

    cols = range(returns.n_cols)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            fits = list(pool.map(fit_col, cols))
    else:
        fits = [fit_col(j) for j in cols]
    by_ticker = dict(zip(returns.tickers, fits))
    stamp = _stamp(args)
    artifacts.write_json(_out(args, "fits.json"), artifacts.fits_payload(by_ticker), stamp)
    resid = ReturnMatrix(
        dates=returns.dates,
        tickers=returns.tickers,
        values=np.column_stack([f.residuals for f in fits]),
    )
    _write_matrix_csv(_out(args, "residuals.csv"), resid, stamp)
    n_conv = sum(f.converged for f in fits)
    print(f"wrote {_out(args, 'fits.json')} ({n_conv}/{len(fits)} converged)")
    return 0


def cmd_diagnose(args) -> int:
    resid = _read_matrix_csv(args.residuals)
    nus = _fit_nu_by_ticker(args.fits)
    order = serial_dependence_order(resid.values, max_lag=args.max_lag)
    order_sq = serial_dependence_order(resid.values, max_lag=args.max_lag, squared=True)
    ad = []
    for j, t in enumerate(resid.tickers):
        score = ad_t_statistic(resid.values[:, j], nus[t])
        ad.append({"ticker": t, "statistic": score.statistic, "p_value": score.p_value})
    payload = {
        "serial_order": [{"ticker": resid.tickers[j], "min_p": p} for j, p in order],
        "serial_order_squared": [{"ticker": resid.tickers[j], "min_p": p} for j, p in order_sq],
        "anderson_darling": ad,
    }
    artifacts.write_json(_out(args, "diagnostics.json"), payload, _stamp(args))
    print(f"wrote {_out(args, 'diagnostics.json')}")
    return 0


def cmd_depmat(args) -> int:
    resid = _read_matrix_csv(args.residuals)
    U = pseudo_observations(resid.values, tickers=resid.tickers)
    M = dependence_matrix(U, measure=_MEASURES[args.measure], parallelism=args.threads)
    stamp = _stamp(args)
    artifacts.write_json(_out(args, "depmat.json"), artifacts.depmat_payload(M), stamp)
    header, rows = artifacts.depmat_rows(M)
    artifacts.write_csv(_out(args, "depmat.csv"), header, rows, stamp)
    print(f"wrote {_out(args, 'depmat.json')} ({M.measure}, {len(M.failures)} failures)")
    return 0


def cmd_fit_joint(args) -> int:
    resid = _read_matrix_csv(args.residuals)
    U = pseudo_observations(resid.values, tickers=resid.tickers)
    fit = fit_joint_t(U)
    payload = {
        "tickers": list(resid.tickers),
        "P": [[float(v) for v in row] for row in fit.P],
        "nu": fit.nu,
        "loglik": fit.loglik,
    }
    artifacts.write_json(_out(args, "joint.json"), payload, _stamp(args))
    print(f"wrote {_out(args, 'joint.json')} (nu={fit.nu:.3f})")
    return 0


def cmd_gof(args) -> int:
    resid = _read_matrix_csv(args.residuals)
    U = pseudo_observations(resid.values, tickers=resid.tickers)
    joint = fit_joint_t(U)
    d = U.n_cols
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]

    def fit_pair(pair):
        i, j = pair
        try:
            return pair, fit_biv_t(U.values[:, i], U.values[:, j])
        except (ValueError, FloatingPointError):
            return pair, None

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            fitted = list(pool.map(fit_pair, pairs))
    else:
        fitted = [fit_pair(p) for p in pairs]
    pairwise = {p: f for p, f in fitted if f is not None}
    reports = compare_models(
        U, pairwise, joint, threshold=args.threshold, parallelism=args.threads
    )
    for p, f in fitted:
        if f is None:
            reports.append(PairGofReport(p[0], p[1], math.nan, math.nan, "missing"))
    artifacts.write_json(
        _out(args, "gof.json"), artifacts.gof_payload(reports, resid.tickers), _stamp(args)
    )
    print(f"wrote {_out(args, 'gof.json')} ({len(reports)} pairs)")
    return 0


def cmd_zenpath(args) -> int:
    M = _read_depmat(args.depmat)
    sectors = load_sectors(args.sectors) if args.sectors else None
    if args.sector_mode in ("within", "cross", "per-sector") and sectors is None:
        raise _UsageError(f"--sector-mode {args.sector_mode} needs --sectors")
    if args.sector_mode == "per-sector":
        path = per_sector_paths(M, sectors)
    else:
        sector_filter = args.sector_mode if args.sector_mode in ("within", "cross") else None
        if args.order == "extremes":
            ranked = rank_pairs(M, "descending", sector_filter, sectors)
            path = connect_pairs(extreme_pairs(ranked, args.top, args.bottom))
        else:
            direction = "descending" if args.order == "desc" else "ascending"
            path = connect_pairs(
                rank_pairs(M, direction, sector_filter, sectors), dedup=True
            )
    payload = artifacts.zenpath_payload(path, M.tickers, M)
    payload["groups_ix"] = [list(g) for g in path.groups]
    artifacts.write_json(_out(args, "zenpath.json"), payload, _stamp(args))
    print(f"wrote {_out(args, 'zenpath.json')} ({path.n_panels} panels)")
    return 0


def _load_style(path) -> dict:
    """Key=value style overrides; numeric values are parsed as floats."""
    style = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"style line {line!r} is not key=value")
            key, _, value = line.partition("=")
            try:
                style[key.strip()] = float(value.strip())
            except ValueError:
                style[key.strip()] = value.strip()
    return style


def cmd_zenplot(args) -> int:
    doc = _read_json(args.zenpath)
    path = Zenpath(groups=tuple(tuple(g) for g in doc["groups_ix"]))
    resid = _read_matrix_csv(args.residuals)
    U = pseudo_observations(resid.values, tickers=resid.tickers)
    style = _load_style(args.style) if args.style else None

    grid = layout(path, width=args.width, var_names=resid.tickers)
    nus = _fit_nu_by_ticker(args.fits) if args.fits else {}
    panels = []
    for cell in grid.cells_2d:
        if args.panel == "scatter":
            panels.append(scatter_panel(U.values[:, cell.hvar], U.values[:, cell.vvar]))
        elif args.panel == "acf":
            vals, band = acf(resid.values[:, cell.hvar] ** 2, max_lag=30)
            panels.append(acf_panel(vals[1:], band))
        else:  # qq
            t = resid.tickers[cell.hvar]
            if t not in nus:
                raise _UsageError("--panel qq needs --fits with every ticker")
            sample = resid.values[:, cell.hvar]
            env = qq_envelope(nus[t], sample.size, nsim=args.envelope_sims, seed=args.seed)
            panels.append(qq_panel(sample, nus[t], env))
    svg = render(grid, panels, style)
    out = Path(args.out) if args.out else _out(args, "zenplot.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    artifacts.write_svg(out, svg, _stamp(args))
    print(f"wrote {out} ({len(panels)} panels)")
    return 0


def cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    if args.prices is None:
        cmd_synth(_sub(args, cmd_synth, d=args.d, T=args.T, missing_frac=0.0, contaminate=None))
        args.prices = str(out_dir / "prices.csv")
        args.sectors = str(out_dir / "sectors.csv")
    cmd_ingest(_sub(args, cmd_ingest, prices=args.prices, sectors=args.sectors,
                    max_missing=args.max_missing))
    cmd_degarch(_sub(args, cmd_degarch, returns=str(out_dir / "returns.csv")))
    resid = str(out_dir / "residuals.csv")
    fits = str(out_dir / "fits.json")
    cmd_diagnose(_sub(args, cmd_diagnose, residuals=resid, fits=fits, max_lag=30))
    cmd_depmat(_sub(args, cmd_depmat, residuals=resid, measure=args.measure))
    cmd_fit_joint(_sub(args, cmd_fit_joint, residuals=resid))
    cmd_gof(_sub(args, cmd_gof, residuals=resid, threshold=args.threshold))
    cmd_zenpath(_sub(args, cmd_zenpath, depmat=str(out_dir / "depmat.json"),
                     sectors=args.sectors, order=args.order, top=args.top,
                     bottom=args.bottom, sector_mode=args.sector_mode))
    cmd_zenplot(_sub(args, cmd_zenplot, zenpath=str(out_dir / "zenpath.json"),
                     residuals=resid, fits=fits, width=args.width, panel=args.panel,
                     style=None, out=None, envelope_sims=args.envelope_sims))
    print(f"pipeline complete in {out_dir}")
    return 0


def _sub(args, func, **overrides):
    """Derived namespace for an internal stage call, keeping the globals."""
    ns = argparse.Namespace(**vars(args))
    for k, v in overrides.items():
        setattr(ns, k, v)
    ns.func = func
    return ns


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zenscope", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="seed for all stochastic stages")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--out-dir", default=".", help="artifact output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic price panel")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--missing-frac", type=float, default=0.0)
    p.add_argument("--contaminate", type=int, default=None,
                   help="column index to give serially dependent residuals")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="prices -> filtered, filled negative log-returns")
    p.add_argument("--prices", required=True)
    p.add_argument("--sectors", default=None)
    p.add_argument("--max-missing", type=float, default=0.2)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("degarch", help="fit marginal ARMA-GARCH models per column")
    p.add_argument("--returns", required=True)
    p.set_defaults(func=cmd_degarch)

    p = sub.add_parser("diagnose", help="residual serial-dependence and distribution tests")
    p.add_argument("--residuals", required=True)
    p.add_argument("--fits", required=True)
    p.add_argument("--max-lag", type=int, default=30)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("depmat", help="pairwise dependence matrix on pseudo-observations")
    p.add_argument("--residuals", required=True)
    p.add_argument("--measure", choices=sorted(_MEASURES), default="tau")
    p.set_defaults(func=cmd_depmat)

    p = sub.add_parser("fit-joint", help="joint t copula over all columns")
    p.add_argument("--residuals", required=True)
    p.set_defaults(func=cmd_fit_joint)

    p = sub.add_parser("gof", help="pairwise-vs-joint Rosenblatt goodness of fit")
    p.add_argument("--residuals", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("zenpath", help="order pairs into a zenpath")
    p.add_argument("--depmat", required=True)
    p.add_argument("--order", choices=("desc", "asc", "extremes"), default="desc")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--sector-mode", choices=("any", "within", "cross", "per-sector"),
                   default="any")
    p.add_argument("--sectors", default=None)
    p.set_defaults(func=cmd_zenpath)

    p = sub.add_parser("zenplot", help="render a zenpath to SVG")
    p.add_argument("--zenpath", required=True)
    p.add_argument("--residuals", required=True)
    p.add_argument("--fits", default=None)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--panel", choices=("scatter", "acf", "qq"), default="scatter")
    p.add_argument("--style", default=None, help="key=value style override file")
    p.add_argument("--envelope-sims", type=int, default=200)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_zenplot)

    p = sub.add_parser("pipeline", help="run every stage end to end")
    p.add_argument("--prices", default=None, help="omit to run on synthetic data")
    p.add_argument("--sectors", default=None)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--max-missing", type=float, default=0.2)
    p.add_argument("--measure", choices=sorted(_MEASURES), default="tau")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--order", choices=("desc", "asc", "extremes"), default="desc")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--sector-mode", choices=("any", "within", "cross", "per-sector"),
                   default="any")
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--panel", choices=("scatter", "acf", "qq"), default="scatter")
    p.add_argument("--envelope-sims", type=int, default=200)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
