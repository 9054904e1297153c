#!/usr/bin/env python3
"""Render figures from experiment CSV tables.

Standalone by design: this tool reads only the delimited outputs of the
main harness and validates their schemas itself, so the two components
stay independently buildable.

Usage:
    plots/render.py --csv FILE --kind {mass,scaling,match,wsize} --out FILE.png
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMAS = {
    "mass": ("eig_index", "lambda", "eta", "resonant_size", "mass",
             "one_minus_mass", "normalized_ratio"),
    "scaling": ("n", "seed", "rate", "norm_prune_err", "ratio_prune"),
    "match": ("side", "i", "lambda", "sqrt_deg", "diff", "normalized"),
    "wsize": ("lambda", "eta", "observed_mean", "estimate"),
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    csv: str
    kind: str
    out: str

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def load_rows(path, kind):
    try:
        with open(path) as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise SchemaError(f"{path}: empty file")
            rows = [dict(zip(header, row)) for row in reader]
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    missing = [c for c in SCHEMAS[kind] if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def column(rows, name):
    out = []
    for r in rows:
        try:
            v = float(r[name])
        except ValueError:
            continue
        if not math.isnan(v):
            out.append(v)
    return np.asarray(out)


def fit_slope(x, y):
    """Plain least squares; must agree with the harness slope bit-for-bit
    in exact arithmetic, so keep the same centered formulation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm = x - x.mean()
    return float(xm @ (y - y.mean())) / float(xm @ xm)


def render_mass(rows, out):
    masses = column(rows, "mass")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(masses, bins=np.linspace(0.0, 1.0, 41), color="#443983")
    ax.set_xlabel("resonant mass")
    ax.set_ylabel("count")
    ax.set_title("eigenvector mass on resonant profiles")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return {}


def render_scaling(rows, out):
    n = column(rows, "n")
    err = column(rows, "norm_prune_err")
    ratio = column(rows, "ratio_prune")
    x = np.asarray([math.log(math.log(v)) for v in n])
    slope = fit_slope(x, ratio)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.loglog(n, err, "o", ms=4, alpha=0.6, color="#443983", label="pruning error")
    grid = np.unique(n)
    ax1.loglog(grid, [math.sqrt(math.log(v) / math.log(math.log(v))) for v in grid],
               "k--", label="sqrt(log n / log log n)")
    ax1.set_xlabel("n")
    ax1.set_ylabel("operator norm")
    ax1.legend()
    ax2.plot(x, ratio, "o", ms=4, alpha=0.6, color="#31688e")
    xs = np.linspace(x.min(), x.max() if x.max() > x.min() else x.min() + 1e-9, 40)
    ax2.plot(xs, ratio.mean() + slope * (xs - x.mean()), "k-")
    ax2.annotate(f"slope={slope:.12g}", xy=(0.05, 0.9), xycoords="axes fraction")
    ax2.set_xlabel("log log n")
    ax2.set_ylabel("normalized pruning error")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return {"slope": slope}


def render_match(rows, out):
    lam = column(rows, "lambda")
    sq = column(rows, "sqrt_deg")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(np.sign(lam) * sq, lam, "o", ms=4, alpha=0.55, color="#443983")
    lim = max(1.0, float(np.abs(lam).max()) * 1.1)
    ax.plot([-lim, lim], [-lim, lim], "k--", lw=1)
    ax.set_xlabel("signed sqrt degree")
    ax.set_ylabel("eigenvalue")
    ax.set_title("extreme eigenvalues vs ordered degrees")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return {}


def render_wsize(rows, out):
    lam = column(rows, "lambda")
    obs = column(rows, "observed_mean")
    est = column(rows, "estimate")
    order = np.argsort(lam)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(lam[order], np.maximum(obs[order], 1e-12), "o-",
                color="#31688e", label="observed mean")
    ax.semilogy(lam[order], np.maximum(est[order], 1e-12), "s--",
                color="#35b779", label="estimator")
    ax.set_xlabel("lambda")
    ax.set_ylabel("resonant-set size")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return {}


RENDERERS = {
    "mass": render_mass,
    "scaling": render_scaling,
    "match": render_match,
    "wsize": render_wsize,
}


def render(spec: FigureSpec):
    rows = load_rows(spec.csv, spec.kind)
    return RENDERERS[spec.kind](rows, spec.out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", required=True)
    parser.add_argument("--kind", required=True, choices=sorted(RENDERERS))
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        info = render(FigureSpec(csv=args.csv, kind=args.kind, out=args.out))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    for k, v in sorted(info.items()):
        print(f"{k}={v!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
