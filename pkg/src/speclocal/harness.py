"""Experiment pipelines: configs, Monte-Carlo repetition, CSV/JSON emission.

All emitted tables are byte-deterministic for a fixed config: floats are
written as their shortest round-trip decimals, rows are ordered by
(n, seed, index), and timings never enter the deliverable files.
Individual run failures become status rows; the other runs continue.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats

from . import __version__
from .eigenbasis import forest_structure, pseudo_eigenvectors, uv_gap_norm
from .graph import SparseGraph, degree_order, read_edge_list, sample_grg
from .pruning import prune, vertex_partition, verify_forest, verify_no_down_up, xi_threshold
from .spectral import (VerificationError, eigenvalue_degree_match, extremal_eigs,
                       isolated_vertices, localization_check, log_rate,
                       pruning_error_norm, residual_block_norm, resonant_set,
                       semiloc_mass)
from .weights import (InvalidParameterError, WeightSequence, expected_degrees,
                      make_exponential_quantile, make_iid, make_power_law_quantile,
                      read_weights)

#: pruning radius used by the desk-scale experiment defaults; at the sizes
#: the harness runs, radius-6 cycle removal strips the giant component bare,
#: so experiments keep the short radius and record it in every output
EXPERIMENT_RADIUS = 2


@dataclass(frozen=True)
class ExperimentConfig:
    weight_kind: str = "powerlaw"          # powerlaw | exp | iid_powerlaw | iid_exp
    alpha: float = 2.5
    c: float = 1.0
    n_grid: tuple = (2000,)
    seeds: tuple = (0,)
    model: str = "grg"
    r: int = EXPERIMENT_RADIUS
    nu: float = 1.0
    delta: float = 0.1
    epsilon: float = 0.1
    xi_rule: str = "auto"                  # auto | formula | override
    xi_override: float = 0.0
    eta_rule: str = "fraction"             # fraction | absolute | example
    eta_value: float = 0.5
    k_pairs: int = 1
    tol: float = 1e-8
    graph_file: str = ""
    weights_file: str = ""

    def __post_init__(self):
        if not self.seeds:
            raise InvalidParameterError("seed list must be nonempty")
        if list(self.n_grid) != sorted(self.n_grid):
            raise InvalidParameterError("n grid must be ascending")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        raw = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
        return cls(**raw)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, sort_keys=True, indent=1)
            fh.write("\n")


@dataclass
class RunReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def make_weights(cfg: ExperimentConfig, n, seed=0) -> WeightSequence:
    if cfg.weights_file:
        return read_weights(cfg.weights_file, cfg.epsilon, cfg.delta)
    if cfg.weight_kind == "powerlaw":
        return make_power_law_quantile(n, cfg.alpha, cfg.c, cfg.epsilon, cfg.delta)
    if cfg.weight_kind == "exp":
        return make_exponential_quantile(n, cfg.alpha, cfg.epsilon, cfg.delta)
    if cfg.weight_kind == "iid_powerlaw":
        return make_iid(n, ("power_law", cfg.alpha, cfg.c), seed, cfg.epsilon, cfg.delta)
    if cfg.weight_kind == "iid_exp":
        return make_iid(n, ("exponential", cfg.alpha), seed, cfg.epsilon, cfg.delta)
    raise InvalidParameterError(f"unknown weight kind {cfg.weight_kind!r}")


def resolve_xi(cfg: ExperimentConfig, g: SparseGraph) -> float:
    """Pick the high-degree threshold for one sampled graph.

    The formula value is kept whenever it is attainable; at desk scale it
    routinely exceeds the maximum degree, in which case the auto rule
    falls back to a quarter of the maximum degree so that the resonant
    window of the extreme eigenvalues stays populated.
    """
    if cfg.xi_rule == "override":
        return float(cfg.xi_override)
    formula = xi_threshold(cfg.nu, cfg.delta, g.n) if g.n >= 16 else float(g.n)
    if cfg.xi_rule == "formula":
        return formula
    if cfg.xi_rule == "auto":
        dmax = float(g.degrees.max()) if g.n else 0.0
        return min(formula, max(4.0, dmax / 4.0))
    raise InvalidParameterError(f"unknown xi rule {cfg.xi_rule!r}")


@dataclass
class Pipeline:
    ws: WeightSequence
    g: SparseGraph
    order: object
    pr: object
    xi: float
    part: object
    forest: object
    basis: object


def build_pipeline(cfg: ExperimentConfig, n, seed, variant="proof_derived") -> Pipeline:
    ws = make_weights(cfg, n, seed)
    if cfg.graph_file:
        g = read_edge_list(cfg.graph_file)
    else:
        g = sample_grg(ws, seed, cfg.model)
    if ws.n != g.n:
        raise InvalidParameterError("weights and graph disagree on vertex count")
    order = degree_order(g)
    xi = resolve_xi(cfg, g)
    pr = prune(g, order, r=cfg.r, xi=xi)
    if not verify_forest(pr.g_p) or not verify_no_down_up(pr.g_p, order):
        raise VerificationError("pruned graph failed its deterministic invariants")
    part = vertex_partition(g, ws, xi)
    forest = forest_structure(pr.g_p, order)
    basis = pseudo_eigenvectors(forest, part.v_high, variant)
    return Pipeline(ws=ws, g=g, order=order, pr=pr, xi=xi, part=part,
                    forest=forest, basis=basis)


def eta_for(cfg: ExperimentConfig, lam, n=None) -> float:
    if cfg.eta_rule == "fraction":
        return cfg.eta_value * abs(lam)
    if cfg.eta_rule == "absolute":
        return float(cfg.eta_value)
    if cfg.eta_rule == "example":
        # the power-law localization window (sqrt(alpha)/4) n^(1/(4 alpha))
        if n is None:
            raise InvalidParameterError("example eta rule needs n")
        return math.sqrt(cfg.alpha) / 4.0 * n ** (1.0 / (4.0 * cfg.alpha))
    raise InvalidParameterError(f"unknown eta rule {cfg.eta_rule!r}")


def _fan_out(cfg: ExperimentConfig, worker, threads=1) -> list:
    """Run worker over the (n, seed) grid; output order never depends on
    the worker count."""
    tasks = [(n, seed) for n in cfg.n_grid for seed in cfg.seeds]
    if threads <= 1:
        chunks = [worker(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(worker, tasks))
    return [row for chunk in chunks for row in chunk]


SEMILOC_COLUMNS = ("n", "seed", "eig_index", "lambda", "eta", "resonant_size",
                   "mass", "one_minus_mass", "normalized_ratio", "xi", "r",
                   "status", "version")


def run_semiloc_experiment(cfg: ExperimentConfig, threads=1) -> RunReport:
    """Sample, prune, build the member family, and measure resonant mass
    for the extreme eigenpairs of the unpruned adjacency."""
    report = RunReport(config=cfg)

    def worker(task):
        n, seed = task
        rows = []
        try:
            pl = build_pipeline(cfg, n, seed)
            res = extremal_eigs(pl.g.to_scipy(), pl.g.n, cfg.k_pairs,
                                tol=cfg.tol, seed=seed)
            deg = pl.g.degrees
            pairs = [(i + 1, res.top_values[i], res.top_vectors[:, i])
                     for i in range(len(res.top_values))]
            pairs += [(-(j + 1), res.bottom_values[j], res.bottom_vectors[:, j])
                      for j in range(len(res.bottom_values))]
            for idx, lam, q in pairs:
                eta = eta_for(cfg, lam, n)
                if eta <= 0 or lam == 0:
                    continue
                w = resonant_set(deg, abs(lam), eta, "original")
                sigma = 1.0 if lam > 0 else -1.0
                mass = semiloc_mass(q, pl.basis, w, sigma)
                deficit = (1.0 - mass) * eta * eta / (log_rate(n) ** 2)
                rows.append((n, seed, idx, float(lam), eta,
                             len(w.members), mass, 1.0 - mass,
                             deficit, pl.xi, cfg.r, "ok", __version__))
        except Exception as exc:  # failures become rows, runs continue
            rows.append((n, seed, 0, float("nan"), float("nan"), 0,
                         float("nan"), float("nan"), float("nan"),
                         float("nan"), cfg.r,
                         f"error:{type(exc).__name__}", __version__))
        return rows

    report.rows = _fan_out(cfg, worker, threads)
    masses = [r[6] for r in report.rows if r[11] == "ok" and r[2] == 1]
    report.summary = {
        "experiment": "semiloc",
        "rows": len(report.rows),
        "top_mass_mean": float(np.mean(masses)) if masses else float("nan"),
        "top_mass_q01": float(np.quantile(masses, 0.01)) if masses else float("nan"),
        "top_mass_min": float(np.min(masses)) if masses else float("nan"),
    }
    return report


SCALING_COLUMNS = ("n", "seed", "rate", "norm_prune_err", "ratio_prune",
                   "norm_block", "ratio_block", "norm_uv_gap", "ratio_uv",
                   "xi", "r", "status", "version")


def run_scaling_experiment(cfg: ExperimentConfig, threads=1) -> RunReport:
    """Norm of the pruning error and block residual against the reference
    rate sqrt(log n / log log n), with a least-squares trend."""
    report = RunReport(config=cfg)

    def worker(task):
        n, seed = task
        try:
            pl = build_pipeline(cfg, n, seed)
            rate = log_rate(n)
            npr = pruning_error_norm(pl.g, pl.pr.g_p, tol=cfg.tol, seed=seed)
            nbl = residual_block_norm(pl.pr.g_p, pl.basis, tol=cfg.tol, seed=seed)
            nuv = uv_gap_norm(pl.pr.g_p, pl.forest, pl.basis,
                              tol=cfg.tol, seed=seed)
            return [(n, seed, rate, npr, npr / rate, nbl, nbl / rate, nuv,
                     nuv / rate, pl.xi, cfg.r, "ok", __version__)]
        except Exception as exc:
            return [(n, seed, float("nan"), float("nan"), float("nan"),
                     float("nan"), float("nan"), float("nan"), float("nan"),
                     float("nan"), cfg.r, f"error:{type(exc).__name__}",
                     __version__)]

    report.rows = _fan_out(cfg, worker, threads)
    ok = [r for r in report.rows if r[11] == "ok"]
    report.summary = {"experiment": "scaling", "rows": len(report.rows)}
    if len({r[0] for r in ok}) >= 2:
        x = np.asarray([math.log(math.log(r[0])) for r in ok])
        y = np.asarray([r[4] for r in ok])
        slope, lo, hi = slope_with_ci(x, y)
        report.summary.update({"slope_ratio_prune": slope,
                               "slope_ci_low": lo, "slope_ci_high": hi})
    return report


def slope_with_ci(x, y, level=0.95):
    """Least-squares slope with a two-sided confidence interval."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = x.size
    if m < 3:
        raise InvalidParameterError("need at least 3 points for a slope CI")
    xm = x - x.mean()
    sxx = float(xm @ xm)
    if sxx == 0:
        raise InvalidParameterError("need at least two distinct x values")
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    sigma2 = float(resid @ resid) / (m - 2)
    se = math.sqrt(sigma2 / sxx)
    tq = float(scipy.stats.t.ppf(0.5 + level / 2.0, m - 2))
    return slope, slope - tq * se, slope + tq * se


MATCH_COLUMNS = ("n", "seed", "side", "i", "lambda", "sqrt_deg", "diff",
                 "normalized", "xi", "r", "status", "version")


def run_match_experiment(cfg: ExperimentConfig, threads=1) -> RunReport:
    """Extreme eigenvalues against the ordered square-root degrees."""
    report = RunReport(config=cfg)

    def worker(task):
        n, seed = task
        try:
            pl = build_pipeline(cfg, n, seed)
            res = extremal_eigs(pl.g.to_scipy(), pl.g.n, cfg.k_pairs,
                                tol=cfg.tol, seed=seed)
            return [(n, seed, row["side"], row["i"], row["lam"], row["sqrt_deg"],
                     row["diff"], row["normalized"], pl.xi, cfg.r, "ok",
                     __version__)
                    for row in eigenvalue_degree_match(res, pl.order, n,
                                                       threshold=0.0)]
        except Exception as exc:
            return [(n, seed, "none", 0, float("nan"), float("nan"),
                     float("nan"), float("nan"), float("nan"), cfg.r,
                     f"error:{type(exc).__name__}", __version__)]

    report.rows = _fan_out(cfg, worker, threads)
    ok = [r for r in report.rows if r[10] == "ok"]
    norm_top = [r[7] for r in ok if r[2] == "top" and r[3] <= 10]
    norm_bot = [r[7] for r in ok if r[2] == "bottom" and r[3] <= 10]
    report.summary = {
        "experiment": "match",
        "rows": len(report.rows),
        "max_normalized_top10": float(np.max(norm_top)) if norm_top else float("nan"),
        "max_normalized_bottom10": float(np.max(norm_bot)) if norm_bot else float("nan"),
    }
    return report


LOCALIZE_COLUMNS = ("n", "seed", "i", "lambda", "applicable", "singleton",
                    "resonant_size", "mass", "vertex", "pi_fixed", "xi", "r",
                    "status", "version")


def run_localization_experiment(cfg: ExperimentConfig, threads=1) -> RunReport:
    """Single-vertex localization for the leading eigenpairs."""
    report = RunReport(config=cfg)

    def worker(task):
        n, seed = task
        k = max(1, int(n ** (1.0 / (2.0 * cfg.alpha + 2.0))))
        rows_out = []
        try:
            pl = build_pipeline(cfg, n, seed)
            d = expected_degrees(pl.ws, "approx")
            res = extremal_eigs(pl.g.to_scipy(), pl.g.n, k,
                                tol=cfg.tol, seed=seed)
            eta = eta_for(cfg, res.top_values[0], n)
            vstar = isolated_vertices(pl.ws, d, cfg.nu, eta)
            rows = localization_check(res, pl.basis, vstar, pl.g.degrees, eta)
            if not rows:
                rows_out.append((n, seed, 0, float("nan"), False, False,
                                 0, float("nan"), -1, False, pl.xi,
                                 cfg.r, "vacuous", __version__))
            for row in rows:
                pi_fixed = bool(pl.order.pi[row["i"] - 1] == row["i"] - 1)
                rows_out.append((n, seed, row["i"], row["lam"],
                                 row["applicable"], row["singleton"],
                                 row["resonant_size"], row["mass"],
                                 row["vertex"], pi_fixed, pl.xi, cfg.r,
                                 "ok", __version__))
        except Exception as exc:
            rows_out.append((n, seed, 0, float("nan"), False, False, 0,
                             float("nan"), -1, False, float("nan"),
                             cfg.r, f"error:{type(exc).__name__}", __version__))
        return rows_out

    report.rows = _fan_out(cfg, worker, threads)
    ok = [r for r in report.rows if r[12] == "ok" and r[4]]
    report.summary = {
        "experiment": "localize",
        "rows": len(report.rows),
        "applicable": len(ok),
        "singleton_fraction": float(np.mean([r[5] for r in ok])) if ok else float("nan"),
        "mass_min": float(np.min([r[7] for r in ok])) if ok else float("nan"),
    }
    return report


def mc_verify(producer, seeds, bound=None):
    """Empirical quantiles of a scalar statistic over seeds, with the
    exceedance fraction against an optional bound."""
    if len(seeds) < 2:
        raise InvalidParameterError("need at least 2 repetitions")
    vals = np.asarray([float(producer(s)) for s in seeds])
    table = {f"q{int(100 * q):02d}": float(np.quantile(vals, q))
             for q in (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)}
    table["mean"] = float(vals.mean())
    table["max"] = float(vals.max())
    table["min"] = float(vals.min())
    if bound is not None:
        table["bound"] = float(bound)
        table["exceed_fraction"] = float(np.mean(vals > bound))
    return table


# -- deterministic emission ---------------------------------------------------

def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def write_summary(path, report: RunReport) -> None:
    payload = {"config": asdict(report.config), "summary": report.summary}
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
