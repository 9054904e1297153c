"""Acceptance suite: one test per criterion, one printed line each.

Calibrated thresholds were frozen from a single calibration pass
(50 seeds at n = 20000 for the mass floor and matching ceilings; the
factor band for the resonant-count estimator) and are asserted here on
disjoint fresh seeds.  Run with ``pytest tests/test_acceptance.py -v -s``
to see the per-criterion lines.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from speclocal import analytics as an
from speclocal import coupling as C
from speclocal import eigenbasis as E
from speclocal import graph as G
from speclocal import pruning as P
from speclocal import spectral as S
from speclocal import weights as W
from speclocal.harness import (ExperimentConfig, build_pipeline,
                               run_match_experiment, run_scaling_experiment,
                               run_semiloc_experiment)

# frozen calibration constants (see the module docstring)
SEMILOC_MASS_FLOOR = 0.8311021187947706   # q01(50 masses) - 0.02
SEMILOC_ADVISORY_FLOOR = 0.75             # confirmed hard: D_max >= 50 runs
MATCH_CEILING_TOP = 0.41                  # 1.25 x calibration max 0.325
MATCH_CEILING_BOTTOM = 0.34               # 1.25 x calibration max 0.271
WSIZE_FACTOR_BAND = (1.0 / 8.0, 5.0)      # calibration ratio was 0.39

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _report(num, ok, detail=""):
    print(f"ACCEPTANCE {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def ensemble_2000():
    """The shared 100-graph ensemble (n = 2000, power law alpha = 2.5)."""
    cfg_auto = ExperimentConfig(weight_kind="powerlaw", alpha=2.5, r=2,
                                xi_rule="auto")
    out = []
    for seed in range(100):
        out.append(build_pipeline(cfg_auto, 2000, seed))
    return out


def test_criterion_01_fixture_exactness():
    g6 = G.g6()
    o6 = G.degree_order(g6)
    pr = P.prune(g6, o6, r=6)
    removed = {tuple(e) for e in g6.edges().tolist()} - \
              {tuple(e) for e in pr.g_p.edges().tolist()}
    ok = removed == {(1, 2)}
    ok &= P.verify_forest(pr.g_p) and P.verify_no_down_up(pr.g_p, o6)
    s9 = G.star9()
    prs = P.prune(s9, G.degree_order(s9), r=6)
    ok &= prs.g_p.edge_count == s9.edge_count
    c5 = G.c5()
    prc = P.prune(c5, G.degree_order(c5), r=6)
    ok &= prc.g_nc.edge_count == 0
    _report(1, ok, f"g6 removed={sorted(removed)}")


def test_criterion_02_sampler_statistics():
    ws2 = W.WeightSequence(np.array([1.0, 1.0]))
    reps = 30000
    hits = sum(G.sample_grg(ws2, s).edge_count for s in range(reps))
    p = 1.0 / 3.0
    tol = 4.0 * math.sqrt(p * (1 - p) / reps)
    freq_ok = abs(hits / reps - p) <= tol

    n = 5000
    ws = W.make_exponential_quantile(n, 1.0)
    g = G.sample_grg(ws, 123)
    d = W.expected_degrees(ws, "exact")
    w, s = ws.w, ws.total
    var_edges = 0.0
    for lo in range(0, n, 500):
        pr = np.outer(w[lo:lo + 500], w)
        pm = pr / (s + pr)
        rows = np.arange(lo, min(n, lo + 500))
        pm[rows - lo, rows] = 0.0
        var_edges += float((pm * (1 - pm)).sum())
    sigma = 2.0 * math.sqrt(var_edges / 2.0) / n
    deg_ok = abs(g.degrees.mean() - d.mean()) <= 3.0 * sigma
    _report(2, freq_ok and deg_ok,
            f"freq={hits / reps:.5f} (tol {tol:.5f}), "
            f"mean-degree diff={abs(g.degrees.mean() - d.mean()):.5f} (3s={3 * sigma:.5f})")


def test_criterion_03_orthonormality(ensemble_2000):
    # as stated: xi from the formula at nu = 1 (no members survive at this
    # size, which the run must report); strengthened with the auto rule so
    # the orthonormality statement is exercised on populated families
    formula_members = 0
    worst = 0.0
    members = 0
    flagged = 0
    for pl in ensemble_2000:
        xi_f = P.xi_threshold(1.0, 0.1, 2000)
        part_f = P.vertex_partition(pl.g, pl.ws, xi_f)
        basis_f = E.pseudo_eigenvectors(pl.forest, part_f.v_high, "proof_derived")
        formula_members += basis_f.size
        worst = max(worst, E.verify_orthonormal(basis_f))
        worst = max(worst, E.verify_orthonormal(pl.basis))
        members += pl.basis.size + len(pl.basis.flagged_sibling)
        flagged += len(pl.basis.flagged_sibling)
    frac = flagged / max(members, 1)
    ok = worst <= 1e-10 and frac <= 0.01
    _report(3, ok, f"gram dev={worst:.2e}, members(formula xi)={formula_members}, "
                   f"members(auto xi)={members}, flagged fraction={frac:.4f}")


def test_criterion_04_residual_identity(ensemble_2000):
    # displayed members satisfy the closed form exactly; the only exception
    # is a parented member without a smaller sibling, which misses the
    # parent indicator with weight 1/sqrt(Z) (checked exactly as well)
    checked = corrected = 0
    worst = 0.0
    for pl in ensemble_2000[:40]:
        basis = E.pseudo_eigenvectors(
            pl.forest, pl.part.v_high, "displayed")
        for i, x in enumerate(basis.vertices):
            x = int(x)
            for sigma in (+1, -1):
                num, clo = E.residual_delta(pl.pr.g_p, pl.forest, basis, x, sigma)
                diff = num.to_dense() - clo.to_dense()
                if pl.forest.parent[x] >= 0 and pl.forest.sib_minus[x].size == 0:
                    diff[int(pl.forest.parent[x])] -= 1.0 / math.sqrt(float(basis.z[i]))
                    corrected += 1
                checked += 1
                worst = max(worst, float(np.abs(diff).max()))
    ok = worst <= 1e-12 and checked > 0
    _report(4, ok, f"members checked={checked}, sibling-free corrections={corrected}, "
                   f"worst deviation={worst:.2e}")


def test_criterion_05_deterministic_tree_bound(ensemble_2000):
    worst_slack = math.inf
    for pl in ensemble_2000:
        for v_high in (pl.part.v_high, set()):
            val = S.forest_restricted_norm(pl.pr.g_p, v_high, tol=1e-9)
            mask = np.ones(pl.g.n, dtype=bool)
            mask[list(v_high)] = False
            keep = [e for e in pl.pr.g_p.edges() if mask[e[0]] and mask[e[1]]]
            sub = G.SparseGraph.from_edges(pl.g.n, np.asarray(keep).reshape(-1, 2),
                                           validate=False)
            bound = 2.0 * math.sqrt(sub.degrees.max() if sub.degrees.size else 0)
            worst_slack = min(worst_slack, bound - val)
    _report(5, worst_slack >= -1e-9, f"min(bound - value)={worst_slack:.4f}")


def test_criterion_06_block_spectra():
    s9 = G.star9()
    res = S.extremal_eigs(s9.to_scipy(), 10, 10)
    want = np.sort([3.0] + [0.0] * 8 + [-3.0])
    ok = bool(np.allclose(np.sort(res.top_values), want, atol=1e-12))
    p3 = G.p3()
    res = S.extremal_eigs(p3.to_scipy(), 3, 3)
    ok &= bool(np.allclose(np.sort(res.top_values),
                           [-math.sqrt(2), 0.0, math.sqrt(2)], atol=1e-12))
    g6 = G.g6()
    pr = P.prune(g6, G.degree_order(g6), r=6)
    res = S.extremal_eigs(pr.g_p.to_scipy(), 6, 2)
    lam1 = float(res.top_values[0])
    ok &= abs(lam1 - math.sqrt(3)) <= 1e-12 and res.method == "dense"
    _report(6, ok, f"g6 pruned lam1={lam1!r}")


def test_criterion_07_embedding_suite():
    rng = np.random.default_rng(2024)
    failures = 0
    checked = 0
    skipped = 0
    for seed in range(200):
        ws = W.make_power_law_quantile(2000, 2.5)
        g = G.sample_grg(ws, seed)
        o = G.degree_order(g)
        pr = P.prune(g, o, r=6)
        root = int(rng.integers(0, 2000))
        trees = C.build_coupled_trees(g, ws, root, 6, seed=seed + 10**6)
        rep = C.verify_embedding(pr.g_nc, root, 6, trees)
        checked += rep.checked_vertices
        skipped += rep.skipped_budget
        if not rep.passed:
            failures += 1
    _report(7, failures == 0,
            f"graphs=200, degree checks={checked}, budget skips={skipped}, "
            f"failures={failures}")


def test_criterion_08_analytics_oracles():
    worst = 0.0
    for s in range(1, 51):
        for x in range(0, 101):
            a = an.upper_incomplete_gamma(float(s), float(x))
            b = an.upper_incomplete_gamma_int(s, float(x))
            if b > 0:
                worst = max(worst, abs(a - b) / b)
    from scipy.stats import poisson
    worst_p = 0.0
    for wv in (0.5, 2.0, 8.0, 50.0, 200.0):
        for lo, hi in ((0, 0), (0, 10), (3, 7), (40, 120), (0, 500)):
            want = float(poisson.cdf(hi, wv) - poisson.cdf(lo - 1, wv))
            worst_p = max(worst_p, abs(an.poisson_interval_prob(wv, lo, hi) - want))
    sandwich = all(an.gamma_sandwich_check(float(s), float(x))
                   for s in range(1, 51) for x in range(1, 101))
    ok = worst <= 1e-12 and worst_p <= 1e-12 and sandwich
    _report(8, ok, f"gamma rel={worst:.2e}, poisson abs={worst_p:.2e}, "
                   f"sandwich={sandwich}")


def test_criterion_09_resonant_inclusion(ensemble_2000):
    violations = 0
    pairs = 0
    for pl in ensemble_2000[:50]:
        d_pm = pl.forest.d_p_minus
        xi = 2.0 * float(np.max(pl.g.degrees - d_pm))
        shift = math.sqrt(xi / 2.0)
        dmax = float(pl.g.degrees.max())
        for lam in (math.sqrt(dmax), math.sqrt(dmax) / 2.0, 3.0):
            for eta in (lam / 2.0, lam / 1.2):
                if eta - shift <= 0:
                    continue
                wp = S.resonant_set(d_pm, lam, eta - shift, "pruned")
                wfull = S.resonant_set(pl.g.degrees, lam, eta, "original")
                pairs += 1
                if not wp.members <= wfull.members:
                    violations += 1
    _report(9, violations == 0 and pairs > 0,
            f"windows checked={pairs}, violations={violations}")


def test_criterion_10_scaling_study():
    cfg = ExperimentConfig(weight_kind="powerlaw", alpha=2.5,
                           n_grid=(1024, 2048, 4096, 8192, 16384),
                           seeds=tuple(range(100, 110)), r=2, tol=1e-7)
    rep = run_scaling_experiment(cfg)
    ok_rows = [r for r in rep.rows if r[11] == "ok"]
    slope = rep.summary["slope_ratio_prune"]
    lo, hi = rep.summary["slope_ci_low"], rep.summary["slope_ci_high"]
    ok = len(ok_rows) == 50 and lo <= 0.0
    _report(10, ok, f"slope={slope:.4f}, CI=[{lo:.4f}, {hi:.4f}] "
                    "(contains 0 or negative)")


def test_criterion_11_semilocalization():
    cfg = ExperimentConfig(weight_kind="powerlaw", alpha=2.5, n_grid=(20000,),
                           seeds=tuple(range(50, 70)), r=2, k_pairs=1, tol=1e-8)
    rep = run_semiloc_experiment(cfg)
    rows = [r for r in rep.rows if r[11] == "ok" and r[2] == 1]
    masses = [r[6] for r in rows]
    ok = len(masses) == 20 and all(m > SEMILOC_MASS_FLOOR for m in masses)
    # the advisory 0.75 floor was confirmed by calibration for runs whose
    # maximum degree reaches 50; at this size that is every run
    dmax_checked = 0
    for (n, seed), m in zip(((20000, s) for s in range(50, 70)), masses):
        ws = W.make_power_law_quantile(n, 2.5)
        g = G.sample_grg(ws, seed)
        if g.degrees.max() >= 50:
            dmax_checked += 1
            ok &= m > SEMILOC_ADVISORY_FLOOR
    _report(11, ok, f"fresh masses min={min(masses):.4f} "
                    f"(floor {SEMILOC_MASS_FLOOR:.4f}), runs with Dmax>=50: "
                    f"{dmax_checked}/20 all > {SEMILOC_ADVISORY_FLOOR}")


def test_criterion_12_eigenvalue_degree_matching():
    cfg = ExperimentConfig(weight_kind="powerlaw", alpha=2.5, n_grid=(20000,),
                           seeds=tuple(range(50, 70)), r=2, k_pairs=10, tol=1e-8)
    rep = run_match_experiment(cfg)
    ok_rows = [r for r in rep.rows if r[10] == "ok"]
    top = [r[7] for r in ok_rows if r[2] == "top" and r[3] <= 10]
    bottom = [r[7] for r in ok_rows if r[2] == "bottom" and r[3] <= 10]
    ok = (len(top) == 200 and len(bottom) == 200
          and max(top) <= MATCH_CEILING_TOP
          and max(bottom) <= MATCH_CEILING_BOTTOM)
    _report(12, ok, f"top10 max={max(top):.4f} (ceiling {MATCH_CEILING_TOP}), "
                    f"bottom10 max={max(bottom):.4f} (ceiling {MATCH_CEILING_BOTTOM})")


def test_criterion_13_resonant_estimators():
    n, alpha = 10**4, 1.0
    ws = W.make_exponential_quantile(n, alpha)
    lam, eta = 8.0, 4.0
    counts = []
    for seed in range(1000, 1100):
        g = G.sample_grg(ws, seed)
        counts.append(int(np.sum(np.abs(np.sqrt(g.degrees) - lam) <= eta)))
    counts = np.asarray(counts, dtype=float)
    est = an.expected_w_exponential(n, alpha, lam, eta).value
    mean = float(counts.mean())
    band_ok = WSIZE_FACTOR_BAND[0] * est <= mean <= WSIZE_FACTOR_BAND[1] * est
    gen = an.expected_w_generic(ws, lam, eta)
    sigma = float(counts.std()) / math.sqrt(counts.size)
    markov_ok = mean <= gen + 3.0 * sigma
    _report(13, band_ok and markov_ok,
            f"mean #W={mean:.4f}, estimator={est:.4f} "
            f"(band [{WSIZE_FACTOR_BAND[0] * est:.4f}, {WSIZE_FACTOR_BAND[1] * est:.4f}]), "
            f"generic bound={gen:.1f}")


def test_criterion_14_plot_component(tmp_path):
    render = os.path.join(REPO, "plots", "render.py")
    samples = os.path.join(REPO, "plots", "sample_data")
    ok = True
    for kind, name in (("mass", "semiloc.csv"), ("scaling", "scaling.csv"),
                       ("match", "match.csv"), ("wsize", "wsize.csv")):
        out = tmp_path / f"{kind}.png"
        proc = subprocess.run(
            [sys.executable, render, "--csv", os.path.join(samples, name),
             "--kind", kind, "--out", str(out)],
            capture_output=True, text=True)
        ok &= proc.returncode == 0 and out.exists()
        if kind == "scaling":
            slope = float(proc.stdout.split("slope=")[1].strip())
            with open(os.path.join(samples, "scaling_summary.json")) as fh:
                want = json.load(fh)["summary"]["slope_ratio_prune"]
            ok &= abs(slope - want) <= 1e-9
    _report(14, ok, "all four figure kinds rendered; slope matches harness")
