"""Stamped, deterministic artifact writers shared by the CLI stages.

Every artifact carries tool version, seed and a configuration hash.  The
hash covers the semantic configuration only — worker counts and output
locations are excluded — so reruns that differ only in parallelism or
destination produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math

from . import __version__
from .dependence import DependenceMatrix
from .gof import PairGofReport
from .margins import MarginalFit
from .zenpath import Zenpath

__all__ = [
    "config_hash",
    "make_stamp",
    "write_json",
    "write_csv",
    "write_svg",
    "fits_payload",
    "depmat_payload",
    "depmat_rows",
    "zenpath_payload",
    "gof_payload",
]

_HASH_EXCLUDED = ("threads", "out_dir")


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of the semantic configuration."""
    cfg = {k: v for k, v in sorted(config.items()) if k not in _HASH_EXCLUDED}
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def make_stamp(seed: int | None, config: dict) -> dict:
    return {
        "tool": "zenscope",
        "version": __version__,
        "seed": seed,
        "config_hash": config_hash(config),
    }


def _num(x: float):
    """NaN/inf are not valid JSON; map them to null."""
    x = float(x)
    return x if math.isfinite(x) else None


def write_json(path, payload: dict, stamp: dict) -> None:
    doc = {"meta": stamp, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def write_csv(path, header: list[str], rows, stamp: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(stamp, sort_keys=True, separators=(",", ":")) + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_svg(path, svg_text: str, stamp: dict) -> None:
    comment = "<!-- " + json.dumps(stamp, sort_keys=True, separators=(",", ":")) + " -->"
    lines = svg_text.split("\n")
    # Keep the XML declaration first; the stamp goes right after it.
    lines.insert(1, comment)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def fits_payload(fits: dict[str, MarginalFit]) -> dict:
    return {
        "fits": [
            {
                "ticker": ticker,
                "mu": _num(f.mu),
                "phi": _num(f.phi),
                "theta": _num(f.theta),
                "alpha0": _num(f.alpha0),
                "alpha1": _num(f.alpha1),
                "beta": _num(f.beta),
                "nu": _num(f.nu),
                "loglik": _num(f.loglik),
                "converged": bool(f.converged),
            }
            for ticker, f in fits.items()
        ]
    }


def depmat_payload(M: DependenceMatrix) -> dict:
    d = M.dim
    lower = [_num(M.values[i, j]) for i in range(1, d) for j in range(i)]
    aux = None
    if M.aux is not None:
        aux = [_num(M.aux[i, j]) for i in range(1, d) for j in range(i)]
    return {
        "measure": M.measure,
        "tickers": list(M.tickers),
        "values": lower,
        "aux": aux,
        "failures": [[i, j, msg] for i, j, msg in M.failures],
    }


def depmat_rows(M: DependenceMatrix) -> tuple[list[str], list[list]]:
    """Full symmetric grid: header row of tickers, one labelled row each."""
    header = ["ticker", *M.tickers]
    rows = []
    for i, t in enumerate(M.tickers):
        rows.append([t, *(repr(float(v)) for v in M.values[i])])
    return header, rows


def zenpath_payload(path: Zenpath, tickers, M: DependenceMatrix | None = None) -> dict:
    groups = [[tickers[v] for v in g] for g in path.groups]
    scores = None
    if M is not None:
        scores = [
            [_num(M.values[a, b]) for a, b in zip(g, g[1:])] for g in path.groups
        ]
    return {"groups": groups, "scores": scores, "notes": list(path.notes)}


def gof_payload(reports: list[PairGofReport], tickers) -> dict:
    return {
        "note": "p-values are uncorrected for multiple testing",
        "reports": [
            {
                "i": r.i,
                "j": r.j,
                "ticker_i": tickers[r.i],
                "ticker_j": tickers[r.j],
                "p_pairwise": _num(r.p_pairwise),
                "p_joint": _num(r.p_joint),
                "category": r.category,
            }
            for r in reports
        ],
    }
