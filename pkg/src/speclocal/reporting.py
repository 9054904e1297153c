"""Aggregate experiment outputs into one summary table plus figures.

Scans an output directory for the experiment CSVs, writes a delimited
summary next to them, and renders one figure per recognized table kind.
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import slope_with_ci, write_csv  # noqa: E402


def _read_csv(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows


def _numeric(rows, col):
    out = []
    for r in rows:
        try:
            v = float(r[col])
        except (KeyError, ValueError):
            continue
        if not math.isnan(v):
            out.append(v)
    return np.asarray(out)


def _summary_rows(name, rows, cols):
    out = []
    for col in cols:
        vals = _numeric(rows, col)
        if vals.size == 0:
            continue
        out.append((name, col, vals.size, float(vals.mean()),
                    float(np.quantile(vals, 0.01)), float(np.quantile(vals, 0.5)),
                    float(np.quantile(vals, 0.99)), float(vals.min()),
                    float(vals.max())))
    return out


def render_mass_figure(rows, out_path):
    masses = _numeric(rows, "mass")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(masses, bins=np.linspace(0.0, 1.0, 41), color="#31688e")
    ax.set_xlabel("resonant mass")
    ax.set_ylabel("count")
    ax.set_title("mass of extreme eigenvectors on resonant profiles")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_scaling_figure(rows, out_path):
    n = _numeric(rows, "n")
    err = _numeric(rows, "norm_prune_err")
    ratio = _numeric(rows, "ratio_prune")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.loglog(n, err, "o", ms=4, alpha=0.6, color="#31688e", label="|A - A_p|")
    grid = np.unique(n)
    ax1.loglog(grid, [math.sqrt(math.log(v) / math.log(math.log(v))) for v in grid],
               "k--", label="sqrt(log n / log log n)")
    ax1.set_xlabel("n")
    ax1.set_ylabel("operator norm")
    ax1.legend()
    x = np.asarray([math.log(math.log(v)) for v in n])
    slope, lo, hi = slope_with_ci(x, ratio)
    ax2.plot(x, ratio, "o", ms=4, alpha=0.6, color="#35b779")
    xs = np.linspace(x.min(), x.max(), 50)
    ax2.plot(xs, ratio.mean() + slope * (xs - x.mean()), "k-")
    ax2.annotate(f"slope={slope:.6f}\nCI=[{lo:.6f}, {hi:.6f}]",
                 xy=(0.05, 0.85), xycoords="axes fraction")
    ax2.set_xlabel("log log n")
    ax2.set_ylabel("normalized pruning error")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return slope


def render_match_figure(rows, out_path):
    lam = _numeric(rows, "lambda")
    sq = _numeric(rows, "sqrt_deg")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(sq * np.sign(lam), lam, "o", ms=4, alpha=0.55, color="#31688e")
    lim = max(1.0, float(np.abs(lam).max()) * 1.1) if lam.size else 1.0
    ax.plot([-lim, lim], [-lim, lim], "k--", lw=1)
    ax.set_xlabel("signed sqrt degree (ordered)")
    ax.set_ylabel("eigenvalue")
    ax.set_title("extreme eigenvalues vs sqrt degrees")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_wsize_figure(rows, out_path):
    lam = _numeric(rows, "lambda")
    obs = _numeric(rows, "observed_mean")
    est = _numeric(rows, "estimate")
    fig, ax = plt.subplots(figsize=(6, 4))
    order = np.argsort(lam)
    ax.semilogy(lam[order], np.maximum(obs[order], 1e-12), "o-", label="observed mean")
    ax.semilogy(lam[order], np.maximum(est[order], 1e-12), "s--", label="estimator")
    ax.set_xlabel("lambda")
    ax.set_ylabel("resonant-set size")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


_KINDS = {
    "semiloc": (("mass", "one_minus_mass", "normalized_ratio", "resonant_size"),
                render_mass_figure),
    "scaling": (("norm_prune_err", "ratio_prune", "ratio_block", "ratio_uv"),
                render_scaling_figure),
    "match": (("diff", "normalized"), render_match_figure),
    "localize": (("mass", "resonant_size"), None),
    "wsize": (("observed_mean", "estimate"), render_wsize_figure),
}


def aggregate_report(out_dir, figures=True) -> list:
    """Summarize every recognized CSV under out_dir; returns written paths."""
    written = []
    summary = []
    for name in sorted(os.listdir(out_dir)):
        if not name.endswith(".csv") or name == "summary.csv":
            continue
        kind = next((k for k in _KINDS if name.startswith(k)), None)
        if kind is None:
            continue
        cols, renderer = _KINDS[kind]
        _, rows = _read_csv(os.path.join(out_dir, name))
        if not rows:
            continue
        summary.extend(_summary_rows(name, rows, cols))
        if figures and renderer is not None:
            fig_path = os.path.join(out_dir, name[:-4] + ".png")
            renderer(rows, fig_path)
            written.append(fig_path)
    out = os.path.join(out_dir, "summary.csv")
    write_csv(out, ("source", "column", "count", "mean", "q01", "q50", "q99",
                    "min", "max"), summary)
    written.append(out)
    return written
