"""Command-line interface.

Exit codes: 0 ok, 1 usage error, 2 runtime failure, 3 verification failure
(a deterministic invariant was violated).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, analytics, diagnostics
from .coupling import build_coupled_trees, verify_embedding
from .eigenbasis import forest_structure, pseudo_eigenvectors
from .graph import degree_order, read_edge_list, sample_grg, write_edge_list
from .harness import (ExperimentConfig, LOCALIZE_COLUMNS, MATCH_COLUMNS,
                      SCALING_COLUMNS, SEMILOC_COLUMNS, run_localization_experiment,
                      run_match_experiment, run_scaling_experiment,
                      run_semiloc_experiment, write_csv, write_summary)
from .pruning import PruningInvariantError, prune, verify_forest, verify_no_down_up
from .spectral import NoConvergenceError, VerificationError, extremal_eigs
from .weights import (make_exponential_quantile, make_iid, make_power_law_quantile,
                      read_weights, write_weights)


class UsageError(ValueError):
    pass


def _common(sub):
    sub.add_argument("--config", default=None, help="JSON experiment config")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--out-dir", default=".")
    return sub


def _build_parser():
    p = argparse.ArgumentParser(prog="speclocal",
                                description="semilocalization experiments on "
                                            "inhomogeneous random graphs")
    p.add_argument("--version", action="version", version=__version__)
    subs = p.add_subparsers(dest="command", required=True)

    s = _common(subs.add_parser("weights", help="generate a weight file"))
    s.add_argument("--kind", required=True, choices=("powerlaw", "exp", "iid"))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--family", choices=("powerlaw", "exp"), default="exp",
                   help="law used by --kind iid")
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("sample", help="sample a graph"))
    s.add_argument("--weights", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--model", choices=("grg", "chung_lu"), default="grg")
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("prune", help="two-step pruning with ledger"))
    s.add_argument("--graph", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--r", type=int, default=6)
    s.add_argument("--nu", type=float, default=1.0)
    s.add_argument("--xi", type=float, default=None)
    s.add_argument("--out-forest", required=True)
    s.add_argument("--out-ledger", required=True)

    s = _common(subs.add_parser("basis", help="pseudo-eigenvector family"))
    s.add_argument("--forest", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--xi", type=float, required=True)
    s.add_argument("--variant", choices=("proof", "displayed"), default="proof")
    s.add_argument("--graph", default=None,
                   help="original graph for the degree order; defaults to the forest")
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("spectrum", help="extreme eigenpairs"))
    s.add_argument("--graph", required=True)
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("semiloc", help="resonant-mass experiment"))
    s.add_argument("--graph", default=None)
    s.add_argument("--weights", default=None)
    s.add_argument("--nu", type=float, default=None)
    s.add_argument("--eta-frac", type=float, default=None)
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--seeds", type=int, nargs="*", default=None)
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("wsize", help="resonant-set size estimators"))
    s.add_argument("--weights", required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--family", choices=("generic", "exp", "powerlaw"), required=True)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("coupling-check", help="tree-coupling verification"))
    s.add_argument("--graph", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--r", type=int, default=6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("diagnostics", help="envelope statistics"))
    s.add_argument("--graph", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--nu", type=float, default=1.0)
    s.add_argument("--r", type=int, default=6)
    s.add_argument("--out", required=True)

    s = _common(subs.add_parser("scaling", help="norm-scaling experiment"))
    s.add_argument("--out", default="scaling.csv")

    s = _common(subs.add_parser("localize", help="single-vertex localization"))
    s.add_argument("--out", default="localize.csv")

    s = _common(subs.add_parser("match", help="eigenvalue vs degree matching"))
    s.add_argument("--out", default="match.csv")

    s = _common(subs.add_parser("report", help="aggregate outputs and render figures"))
    s.add_argument("--no-figures", action="store_true")

    return p


def _load_config(args, **overrides) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
        if overrides:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
        return cfg
    return ExperimentConfig(**overrides)


def _cmd_weights(args) -> int:
    if args.kind == "powerlaw":
        ws = make_power_law_quantile(args.n, args.alpha, args.c)
    elif args.kind == "exp":
        ws = make_exponential_quantile(args.n, args.alpha)
    else:
        dist = (("power_law", args.alpha, args.c) if args.family == "powerlaw"
                else ("exponential", args.alpha))
        ws = make_iid(args.n, dist, args.seed)
    write_weights(args.out, ws)
    return 0


def _cmd_sample(args) -> int:
    ws = read_weights(args.weights)
    g = sample_grg(ws, args.seed, args.model)
    write_edge_list(args.out, g)
    return 0


def _cmd_prune(args) -> int:
    g = read_edge_list(args.graph)
    read_weights(args.weights)  # validates the companion file
    ord_ = degree_order(g)
    pr = prune(g, ord_, r=args.r, xi=args.xi)
    if not verify_forest(pr.g_p):
        raise VerificationError("pruned graph is not a forest")
    if not verify_no_down_up(pr.g_p, ord_):
        raise VerificationError("pruned graph contains a down-up path")
    write_edge_list(args.out_forest, pr.g_p)
    deg_b = pr.g.degrees
    deg_a = pr.g_p.degrees
    rows = [(x, len(pr.s1_cyc[x]), len(pr.removed_du[x]), int(deg_b[x]), int(deg_a[x]))
            for x in range(g.n)]
    write_csv(args.out_ledger,
              ("vertex", "removed_cyc_count", "removed_du_count",
               "degree_before", "degree_after"), rows)
    return 0


def _cmd_basis(args) -> int:
    g_p = read_edge_list(args.forest)
    read_weights(args.weights)
    source = read_edge_list(args.graph) if args.graph else g_p
    ord_ = degree_order(source)
    forest = forest_structure(g_p, ord_)
    v_high = set(np.flatnonzero(source.degrees >= args.xi).tolist())
    variant = "proof_derived" if args.variant == "proof" else "displayed"
    basis = pseudo_eigenvectors(forest, v_high, variant)
    members = []
    for i, x in enumerate(basis.vertices):
        for sigma in (1, -1):
            vec = basis.vector(int(x), sigma)
            nz = np.flatnonzero(np.abs(vec) > 0)
            members.append({"vertex": int(x), "sigma": sigma,
                            "z": float(basis.z[i]),
                            "entries": [[int(j), float(vec[j])] for j in nz]})
    payload = {"variant": variant, "xi": args.xi,
               "dropped_childless": [int(v) for v in basis.dropped_childless],
               "flagged_sibling": [int(v) for v in basis.flagged_sibling],
               "members": members}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return 0


def _cmd_spectrum(args) -> int:
    g = read_edge_list(args.graph)
    res = extremal_eigs(g.to_scipy(), g.n, min(args.k, g.n), tol=args.tol,
                        seed=args.seed)
    rows = []
    for i, lam in enumerate(res.top_values):
        rows.append(("top", i + 1, float(lam), float(res.top_residuals[i]),
                     res.method, __version__))
    for j, lam in enumerate(res.bottom_values):
        rows.append(("bottom", j + 1, float(lam), float(res.bottom_residuals[j]),
                     res.method, __version__))
    write_csv(args.out, ("side", "i", "eigenvalue", "residual", "method", "version"),
              rows)
    return 0


def _cmd_semiloc(args) -> int:
    over = {}
    if args.eta_frac is not None:
        over.update(eta_rule="fraction", eta_value=args.eta_frac)
    if args.nu is not None:
        over["nu"] = args.nu
    if args.k is not None:
        over["k_pairs"] = args.k
    if args.r is not None:
        over["r"] = args.r
    if args.graph:
        over["graph_file"] = args.graph
    if args.weights:
        over["weights_file"] = args.weights
        n = read_weights(args.weights).n
        over["n_grid"] = (n,)
    if args.seeds is not None:
        over["seeds"] = tuple(args.seeds)
    cfg = _load_config(args, **over)
    report = run_semiloc_experiment(cfg, threads=args.threads)
    write_csv(args.out, SEMILOC_COLUMNS, report.rows)
    write_summary(os.path.splitext(args.out)[0] + "_summary.json", report)
    return 0


def _cmd_wsize(args) -> int:
    ws = read_weights(args.weights)
    out = {"n": ws.n, "lambda": args.lam, "eta": args.eta, "family": args.family,
           "generic_bound": analytics.expected_w_generic(ws, args.lam, args.eta)}
    if args.family == "exp":
        est = analytics.expected_w_exponential(ws.n, args.alpha, args.lam,
                                               args.eta, ws.delta)
        out.update({"estimate": est.value, "log_slack": est.log_slack})
    elif args.family == "powerlaw":
        est = analytics.expected_w_powerlaw(ws.n, args.alpha, args.lam,
                                            args.eta, ws.delta)
        out.update({"estimate": est.value, "log_slack": est.log_slack})
    else:
        out["estimate"] = out["generic_bound"]
    lo, hi = analytics.window_bounds(args.lam, args.eta)
    out.update({"window_low": lo, "window_high": hi})
    with open(args.out, "w") as fh:
        json.dump(out, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return 0


def _cmd_coupling_check(args) -> int:
    g = read_edge_list(args.graph)
    ws = read_weights(args.weights)
    ord_ = degree_order(g)
    pr = prune(g, ord_, r=args.r)
    failures = []
    for rep in range(args.reps):
        seed = args.seed + rep
        trees = build_coupled_trees(g, ws, args.x, args.r, seed)
        rep_result = verify_embedding(pr.g_nc, args.x, args.r, trees)
        if not rep_result.passed:
            failures.append({"seed": seed,
                             "edge_failures": rep_result.edge_failures,
                             "degree_failures": rep_result.degree_failures})
    payload = {"x": args.x, "r": args.r, "reps": args.reps,
               "all_pass": not failures, "failures": failures}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return 0 if not failures else 3


def _cmd_diagnostics(args) -> int:
    g = read_edge_list(args.graph)
    ws = read_weights(args.weights)
    ord_ = degree_order(g)
    pr = prune(g, ord_, r=args.r)
    from .harness import resolve_xi
    from .pruning import vertex_partition
    cfg = ExperimentConfig(nu=args.nu, r=args.r)
    xi = resolve_xi(cfg, g)
    part = vertex_partition(g, ws, xi)
    forest = forest_structure(pr.g_p, ord_)
    stats = [
        diagnostics.du_count_stat(pr, args.nu, ws.delta),
        diagnostics.ncplus_stat(pr, ord_, args.nu, ws.delta),
        diagnostics.p1_stat(pr, ord_, part, args.nu, g.n),
        diagnostics.p2_stat(pr, part, args.nu, g.n),
        diagnostics.descending_ball_stat(forest, part, args.nu, g.n),
        diagnostics.sibling_floor_check(forest, part),
        diagnostics.hat_dplus_stat(g, ws, args.nu, ws.delta),
    ]
    rows = []
    for st in stats:
        for x in sorted(st.values):
            v = st.values[x]
            rows.append((st.name, x, v, st.bound, v > st.bound))
    write_csv(args.out, ("stat_name", "vertex", "value", "bound", "exceeded"), rows)
    return 0


def _cmd_scaling(args) -> int:
    cfg = _load_config(args)
    report = run_scaling_experiment(cfg, threads=args.threads)
    out = os.path.join(args.out_dir, args.out)
    write_csv(out, SCALING_COLUMNS, report.rows)
    write_summary(os.path.splitext(out)[0] + "_summary.json", report)
    return 0


def _cmd_localize(args) -> int:
    cfg = _load_config(args)
    report = run_localization_experiment(cfg, threads=args.threads)
    out = os.path.join(args.out_dir, args.out)
    write_csv(out, LOCALIZE_COLUMNS, report.rows)
    write_summary(os.path.splitext(out)[0] + "_summary.json", report)
    return 0


def _cmd_match(args) -> int:
    cfg = _load_config(args)
    report = run_match_experiment(cfg, threads=args.threads)
    out = os.path.join(args.out_dir, args.out)
    write_csv(out, MATCH_COLUMNS, report.rows)
    write_summary(os.path.splitext(out)[0] + "_summary.json", report)
    return 0


def _cmd_report(args) -> int:
    from .reporting import aggregate_report
    aggregate_report(args.out_dir, figures=not args.no_figures)
    return 0


_HANDLERS = {
    "weights": _cmd_weights,
    "sample": _cmd_sample,
    "prune": _cmd_prune,
    "basis": _cmd_basis,
    "spectrum": _cmd_spectrum,
    "semiloc": _cmd_semiloc,
    "wsize": _cmd_wsize,
    "coupling-check": _cmd_coupling_check,
    "diagnostics": _cmd_diagnostics,
    "scaling": _cmd_scaling,
    "localize": _cmd_localize,
    "match": _cmd_match,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _HANDLERS[args.command](args)
    except (VerificationError, PruningInvariantError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 3
    except (UsageError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NoConvergenceError as exc:
        print(f"solver failed: {exc} (achieved {exc.achieved})", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
