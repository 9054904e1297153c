"""Extremal eigenpairs, operator norms, resonant sets, and localization checks.

The eigensolver takes anything that can act on a vector: a dense array, a
scipy sparse matrix, or a bare callable.  Matrices up to the dense cutoff
get a full symmetric eigendecomposition; larger problems run Lanczos with
full reorthogonalization (the extreme spectrum carries near-degenerate
signed star pairs, so orthogonality loss is the main failure mode) and
grow the Krylov space until the requested residuals are met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import rng
from .eigenbasis import PseudoEigenbasis, projector_apply
from .graph import DegreeOrder, SparseGraph
from .weights import InvalidParameterError, WeightSequence

DENSE_CUTOFF = 4096


class NoConvergenceError(RuntimeError):
    def __init__(self, msg, achieved=None):
        super().__init__(msg)
        self.achieved = achieved


class VerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralResult:
    top_values: np.ndarray       # descending
    top_vectors: np.ndarray      # columns match top_values
    bottom_values: np.ndarray    # ascending, smallest first
    bottom_vectors: np.ndarray
    top_residuals: np.ndarray
    bottom_residuals: np.ndarray
    method: str

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([self.top_values, self.bottom_values[::-1]])


@dataclass(frozen=True)
class ResonantSet:
    lam: float
    eta: float
    members: set
    flavor: str


def _as_matvec(op):
    if callable(op) and not sp.issparse(op) and not isinstance(op, np.ndarray):
        return op
    return lambda v: op @ v


def extremal_eigs(op, n, k, tol=1e-9, seed=0, dense_cutoff=DENSE_CUTOFF) -> SpectralResult:
    """Top-k and bottom-k eigenpairs of a self-adjoint operator."""
    if k < 1 or k > n:
        raise InvalidParameterError("need 1 <= k <= n")
    if (isinstance(op, np.ndarray) or sp.issparse(op)) and n <= dense_cutoff:
        dense = op.toarray() if sp.issparse(op) else np.asarray(op, dtype=np.float64)
        vals, vecs = scipy.linalg.eigh(dense)
        top = vals[::-1][:k]
        topv = vecs[:, ::-1][:, :k]
        bot = vals[:k]
        botv = vecs[:, :k]
        tr = np.asarray([np.linalg.norm(dense @ topv[:, i] - top[i] * topv[:, i])
                         for i in range(k)])
        br = np.asarray([np.linalg.norm(dense @ botv[:, i] - bot[i] * botv[:, i])
                         for i in range(k)])
        return SpectralResult(top, topv, bot, botv, tr, br, method="dense")
    return _lanczos_extremes(op, n, k, tol, seed)


def _lanczos_basis(matvec, n, m, seed):
    q = rng.unit_start_vector(seed, n)
    qprev = np.zeros(n)
    beta = 0.0
    alphas = np.zeros(m)
    betas = np.zeros(m)
    big = np.zeros((n, m))
    scale = 0.0
    steps = m
    for j in range(m):
        big[:, j] = q
        w = matvec(q)
        a = float(q @ w)
        scale = max(scale, abs(a) + beta)
        w = w - a * q - beta * qprev
        # full reorthogonalization, applied twice
        w -= big[:, :j + 1] @ (big[:, :j + 1].T @ w)
        w -= big[:, :j + 1] @ (big[:, :j + 1].T @ w)
        b = float(np.linalg.norm(w))
        alphas[j] = a
        if b <= 1e-12 * max(scale, 1.0):
            # invariant subspace found: restart in a fresh direction
            fresh = rng.unit_start_vector(seed + 1009 * (j + 1), n)
            fresh -= big[:, :j + 1] @ (big[:, :j + 1].T @ fresh)
            nv = float(np.linalg.norm(fresh))
            if nv < 1e-10:
                steps = j + 1
                break
            qprev = q
            q = fresh / nv
            betas[j] = 0.0
            beta = 0.0
        else:
            qprev = q
            q = w / b
            betas[j] = b
            beta = b
    return big[:, :steps], alphas[:steps], betas[:steps]


def _lanczos_extremes(op, n, k, tol, seed) -> SpectralResult:
    matvec = _as_matvec(op)
    m = min(n, max(4 * k + 24, 48))
    max_m = min(n, max(3000, 8 * k))
    achieved = None
    while True:
        big, alphas, betas = _lanczos_basis(matvec, n, m, seed)
        steps = alphas.size
        tmat = (np.diag(alphas) + np.diag(betas[:steps - 1], 1)
                + np.diag(betas[:steps - 1], -1))
        vals, svecs = scipy.linalg.eigh(tmat)
        kk = min(k, steps)
        sel_top = np.argsort(vals)[::-1][:kk]
        sel_bot = np.argsort(vals)[:kk]

        def _ritz(sel):
            rv = vals[sel]
            rx = big @ svecs[:, sel]
            rx /= np.linalg.norm(rx, axis=0, keepdims=True)
            res = np.asarray([np.linalg.norm(matvec(rx[:, i]) - rv[i] * rx[:, i])
                              for i in range(len(sel))])
            return rv, rx, res

        tv, tx, tr = _ritz(sel_top)
        bv, bx, br = _ritz(sel_bot)
        achieved = max(tr.max(initial=0.0), br.max(initial=0.0))
        if (kk == k and achieved <= tol) or steps >= n:
            return SpectralResult(tv, tx, bv, bx, tr, br, method="lanczos")
        if m >= max_m:
            raise NoConvergenceError(
                f"lanczos residual {achieved:.2e} above tol {tol} at m={m}",
                achieved=achieved)
        m = min(n, 2 * m)


def operator_norm(op, n, tol=1e-8, seed=0, max_iter=50000, symmetric=True) -> float:
    """Spectral norm by power iteration on the squared operator."""
    matvec = _as_matvec(op)
    if symmetric:
        sq = lambda v: matvec(matvec(v))
    else:
        if sp.issparse(op) or isinstance(op, np.ndarray):
            opt = op.T
            sq = lambda v: opt @ (op @ v)
        else:
            raise InvalidParameterError("non-symmetric case needs a matrix operand")
    best = 0.0
    for attempt in range(3):
        v = rng.unit_start_vector(seed + 131 * attempt, n)
        est_prev = -1.0
        stable = 0
        est = 0.0
        for _ in range(max_iter):
            w = sq(v)
            nw = float(np.linalg.norm(w))
            if nw < 1e-280:
                est = 0.0
                break
            est = math.sqrt(nw)  # ||op||^2 estimate via Rayleigh of op^2
            v = w / nw
            if est_prev >= 0 and abs(est - est_prev) <= tol * max(est, 1e-30):
                stable += 1
                if stable >= 4:
                    break
            else:
                stable = 0
            est_prev = est
        best = max(best, est)
        if best > 0:
            break
    return best


def resonant_set(degrees, lam, eta, flavor="original") -> ResonantSet:
    """Vertices whose square-root degree lies within eta of lambda."""
    if eta <= 0:
        raise InvalidParameterError("eta must be positive")
    if flavor not in ("original", "pruned"):
        raise InvalidParameterError(f"unknown flavor {flavor!r}")
    degrees = np.asarray(degrees, dtype=np.float64)
    members = np.flatnonzero(np.abs(np.sqrt(degrees) - lam) <= eta)
    return ResonantSet(lam=float(lam), eta=float(eta),
                       members=set(members.tolist()), flavor=flavor)


def semiloc_mass(q, basis: PseudoEigenbasis, w: ResonantSet, sigma) -> float:
    """Mass of q on the member profiles whose vertex is resonant."""
    q = np.asarray(q, dtype=np.float64)
    alpha, beta = basis.coefficients(q)
    coeff = alpha + float(sigma) * beta
    mask = np.asarray([int(x) in w.members for x in basis.vertices], dtype=bool)
    return float(np.sum(coeff[mask] ** 2))


def log_rate(n) -> float:
    """The comparison scale sqrt(log n / log log n)."""
    return math.sqrt(math.log(n) / math.log(math.log(n)))


def block_edge_threshold(g_p: SparseGraph, v_high) -> float:
    """Computable stand-in for the bulk edge of the block operator:
    twice the root of the largest degree off the high-degree set."""
    mask = np.ones(g_p.n, dtype=bool)
    for x in v_high:
        mask[int(x)] = False
    best = 0
    for x in np.flatnonzero(mask):
        nb = g_p.neighbors(int(x))
        deg = int(mask[nb].sum())
        best = max(best, deg)
    return 2.0 * math.sqrt(best)


def eigenvalue_degree_match(res: SpectralResult, ord_: DegreeOrder, n,
                            threshold=0.0) -> list:
    """Rows pairing extreme eigenvalues with ordered square-root degrees.

    Positive side: lambda_i against sqrt(D_pi(i)); negative side mirrored
    against -sqrt(D_pi(i)) for the i-th smallest eigenvalue.
    """
    rate = log_rate(n)
    rows = []
    for i, lam in enumerate(res.top_values):
        if lam <= threshold:
            continue
        target = math.sqrt(ord_.degrees[ord_.pi[i]])
        rows.append({"side": "top", "i": i + 1, "lam": float(lam),
                     "sqrt_deg": target, "diff": abs(lam - target),
                     "normalized": abs(lam - target) / rate})
    for j, lam in enumerate(res.bottom_values):
        if lam >= -threshold:
            continue
        target = math.sqrt(ord_.degrees[ord_.pi[j]])
        rows.append({"side": "bottom", "i": j + 1, "lam": float(lam),
                     "sqrt_deg": target, "diff": abs(lam + target),
                     "normalized": abs(lam + target) / rate})
    return rows


def isolated_vertices(ws: WeightSequence, d, nu, eta) -> set:
    """Vertices whose expected degree is both large and well separated.

    The pairwise requirement |d_x - d_y| >= 4 sqrt(nu log n d_x)
    + 4 sqrt(nu log n d_y) factorizes through square roots:
    it holds iff |sqrt(d_x) - sqrt(d_y)| >= 4 sqrt(nu log n), which is
    monotone in |d_x - d_y|, as is the 16 eta^2 requirement, so only the
    two sorted-order neighbors of each vertex need checking.
    """
    d = np.asarray(d, dtype=np.float64)
    n = ws.n
    logn = math.log(n)
    need_sqrt_gap = 4.0 * math.sqrt(nu * logn)
    need_abs_gap = 16.0 * eta * eta
    floor = (4.0 * nu / 9.0) * logn
    order = np.argsort(d, kind="stable")
    ds = d[order]
    rs = np.sqrt(ds)
    ok = np.ones(n, dtype=bool)
    for pos in range(n):
        if ds[pos] < floor:
            ok[pos] = False
            continue
        for nb in (pos - 1, pos + 1):
            if 0 <= nb < n:
                if abs(rs[pos] - rs[nb]) < need_sqrt_gap:
                    ok[pos] = False
                if abs(ds[pos] - ds[nb]) < need_abs_gap:
                    ok[pos] = False
    return set(order[ok].tolist())


def localization_check(res: SpectralResult, basis: PseudoEigenbasis, vstar,
                       degrees, eta, lam_threshold=0.0) -> list:
    """Single-vertex masses for positive eigenpairs whose resonant window
    meets the isolated set."""
    rows = []
    member_set = set(int(x) for x in basis.vertices)
    for i, lam in enumerate(res.top_values):
        if lam <= lam_threshold:
            continue
        w = resonant_set(degrees, lam, eta, "original")
        inter = w.members & set(vstar)
        if not inter:
            rows.append({"i": i + 1, "lam": float(lam), "applicable": False,
                         "singleton": len(w.members) == 1,
                         "resonant_size": len(w.members), "mass": float("nan"),
                         "vertex": -1})
            continue
        q = res.top_vectors[:, i]
        best_mass, best_x = -1.0, -1
        for x in sorted(inter):
            if x not in member_set:
                continue
            u = basis.vector(x, +1)
            mass = float((q @ u) ** 2)
            if mass > best_mass:
                best_mass, best_x = mass, x
        rows.append({"i": i + 1, "lam": float(lam), "applicable": True,
                     "singleton": len(w.members) == 1,
                     "resonant_size": len(w.members), "mass": best_mass,
                     "vertex": best_x})
    return rows


def pruning_error_norm(g: SparseGraph, g_p: SparseGraph, tol=1e-8, seed=0) -> float:
    diff = g.to_scipy() - g_p.to_scipy()
    return operator_norm(diff, g.n, tol=tol, seed=seed)


def residual_block_norm(g_p: SparseGraph, basis: PseudoEigenbasis,
                        tol=1e-8, seed=0) -> float:
    ap = g_p.to_scipy()

    def apply(v):
        w = projector_apply(basis, v, "pi_bar")
        return projector_apply(basis, ap @ w, "pi_bar")

    return operator_norm(apply, g_p.n, tol=tol, seed=seed)


def forest_restricted_norm(g_p: SparseGraph, v_high, tol=1e-8, seed=0) -> float:
    """Norm of the pruned adjacency restricted off the high-degree set.

    The restricted graph is a bounded-degree forest, so the deterministic
    tree bound 2 sqrt(max degree) must hold; violation raises.
    """
    mask = np.ones(g_p.n, dtype=bool)
    for x in v_high:
        mask[int(x)] = False
    keep = [e for e in g_p.edges() if mask[e[0]] and mask[e[1]]]
    sub = SparseGraph.from_edges(g_p.n, np.asarray(keep, dtype=np.int64).reshape(-1, 2),
                                 validate=False)
    max_deg = int(sub.degrees.max()) if sub.n else 0
    value = operator_norm(sub.to_scipy(), g_p.n, tol=tol, seed=seed)
    bound = 2.0 * math.sqrt(max_deg)
    if value > bound + 1e-9:
        raise VerificationError(
            f"restricted forest norm {value} exceeds tree bound {bound}")
    return value


def ipr(q) -> float:
    """Inverse participation ratio of a unit vector."""
    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(q ** 4))
