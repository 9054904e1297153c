"""Pseudo-eigenvector family on the pruned forest and derived operators.

Members live on high-degree vertices.  Each member vector splits as
u_sigma(x) = A(x) + sigma * B(x) with A supported on {x} and the smaller
siblings and B on the children, so applications reduce to two thin sparse
matrices.  Two variants are kept: the proof-derived one (exactly
orthonormal when every parented member has a smaller sibling) and the
displayed one (not unit norm once siblings appear; retained to validate
the residual identity verbatim).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import DegreeOrder, SparseGraph
from .weights import InvalidParameterError, InvalidVertexError


class MultipleParentsError(RuntimeError):
    """More than one greater neighbor: the input graph was not down-up pruned."""


class ChildlessVertexError(ValueError):
    pass


@dataclass(frozen=True)
class SparseVector:
    n: int
    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_pairs(cls, n, pairs) -> "SparseVector":
        acc = {}
        for i, v in pairs:
            acc[int(i)] = acc.get(int(i), 0.0) + float(v)
        idx = np.asarray(sorted(k for k, v in acc.items() if v != 0.0), dtype=np.int64)
        vals = np.asarray([acc[int(i)] for i in idx])
        return cls(n=n, indices=idx, values=vals)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.indices] = self.values
        return out

    def dot(self, other: "SparseVector") -> float:
        i = j = 0
        acc = 0.0
        a, b = self.indices, other.indices
        while i < a.size and j < b.size:
            if a[i] == b[j]:
                acc += float(self.values[i]) * float(other.values[j])
                i += 1
                j += 1
            elif a[i] < b[j]:
                i += 1
            else:
                j += 1
        return acc

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class PrunedForest:
    parent: np.ndarray      # -1 when the vertex has no greater neighbor
    children: list          # per vertex: sorted array of smaller neighbors
    sib_minus: list         # per vertex: siblings strictly smaller in the order
    d_p_minus: np.ndarray
    order: DegreeOrder

    def siblings(self, x) -> np.ndarray:
        p = int(self.parent[x])
        if p < 0:
            return np.empty(0, dtype=np.int64)
        return self.children[p]


@dataclass(frozen=True)
class PseudoEigenbasis:
    n: int
    variant: str
    vertices: np.ndarray        # included member vertices, ascending
    z: np.ndarray
    d_p_minus: np.ndarray
    a_mat: sp.csr_matrix        # column i: symmetric part of member i
    b_mat: sp.csr_matrix        # column i: sigma part of member i
    dropped_childless: np.ndarray
    flagged_sibling: np.ndarray

    @property
    def size(self) -> int:
        return int(self.vertices.size)

    def member_index(self, x) -> int:
        i = int(np.searchsorted(self.vertices, x))
        if i >= self.vertices.size or self.vertices[i] != x:
            raise InvalidVertexError(f"{x} is not a basis member")
        return i

    def vector(self, x, sigma) -> np.ndarray:
        i = self.member_index(x)
        a = np.asarray(self.a_mat[:, i].todense()).ravel()
        b = np.asarray(self.b_mat[:, i].todense()).ravel()
        return a + float(sigma) * b

    def coefficients(self, vec) -> tuple:
        """Per-member inner products: <u_sigma(x), v> = alpha + sigma * beta."""
        return self.a_mat.T @ vec, self.b_mat.T @ vec


def forest_structure(g_p: SparseGraph, ord_: DegreeOrder) -> PrunedForest:
    key = ord_.key
    n = g_p.n
    parent = np.full(n, -1, dtype=np.int64)
    children = []
    for x in range(n):
        nb = g_p.neighbors(x)
        up = nb[key[nb] > key[x]]
        if up.size > 1:
            raise MultipleParentsError(f"vertex {x} has {up.size} greater neighbors")
        if up.size == 1:
            parent[x] = int(up[0])
        children.append(nb[key[nb] < key[x]].copy())
    sib_minus = []
    for x in range(n):
        p = int(parent[x])
        if p < 0:
            sib_minus.append(np.empty(0, dtype=np.int64))
        else:
            sibs = children[p]
            sib_minus.append(sibs[key[sibs] < key[x]].copy())
    d_p_minus = np.asarray([c.size for c in children], dtype=np.int64)
    return PrunedForest(parent=parent, children=children, sib_minus=sib_minus,
                        d_p_minus=d_p_minus, order=ord_)


def star_vectors(forest: PrunedForest, x, sigma) -> SparseVector:
    """Unit star profile (1_x + sigma 1_children / sqrt(children)) / sqrt(2)."""
    d = int(forest.d_p_minus[x])
    if d < 1:
        raise ChildlessVertexError(f"vertex {x} has no children")
    n = forest.parent.size
    pairs = [(x, 1.0 / np.sqrt(2.0))]
    pairs += [(int(c), float(sigma) / np.sqrt(2.0 * d)) for c in forest.children[x]]
    return SparseVector.from_pairs(n, pairs)


def pseudo_eigenvectors(forest: PrunedForest, v_high, variant="proof_derived") -> PseudoEigenbasis:
    """Build the member family over the high-degree vertices.

    Childless candidates are dropped (the two signed vectors degenerate).
    In the proof-derived variant, parented members without a smaller
    sibling break pairwise orthogonality and are excluded from the family;
    they are reported in ``flagged_sibling`` either way.
    """
    if variant not in ("proof_derived", "displayed"):
        raise InvalidParameterError(f"unknown variant {variant!r}")
    n = forest.parent.size
    cand = np.asarray(sorted(int(v) for v in v_high), dtype=np.int64)
    dropped = cand[forest.d_p_minus[cand] < 1]
    cand = cand[forest.d_p_minus[cand] >= 1]
    if dropped.size:
        warnings.warn(f"dropping {dropped.size} childless members", stacklevel=2)
    flagged = np.asarray([x for x in cand
                          if forest.parent[x] >= 0 and forest.sib_minus[x].size == 0],
                         dtype=np.int64)
    if variant == "proof_derived":
        cand = np.asarray([x for x in cand if x not in set(flagged.tolist())],
                          dtype=np.int64)

    a_cols, b_cols = [], []
    zs, dpm = [], []
    for x in cand:
        x = int(x)
        s = int(forest.sib_minus[x].size)
        d = int(forest.d_p_minus[x])
        z = 2.0 + (2.0 / s if s else 0.0)
        zs.append(z)
        dpm.append(d)
        a_pairs = [(x, 1.0 / np.sqrt(z))]
        if s:
            a_pairs += [(int(y), -1.0 / (np.sqrt(z) * s)) for y in forest.sib_minus[x]]
        if variant == "proof_derived":
            bscale = 1.0 / np.sqrt(2.0 * d)
        else:
            bscale = 1.0 / np.sqrt(z * d)
        b_pairs = [(int(c), bscale) for c in forest.children[x]]
        a_cols.append(SparseVector.from_pairs(n, a_pairs))
        b_cols.append(SparseVector.from_pairs(n, b_pairs))

    a_mat = _columns_to_csr(n, a_cols)
    b_mat = _columns_to_csr(n, b_cols)
    return PseudoEigenbasis(n=n, variant=variant, vertices=cand,
                            z=np.asarray(zs), d_p_minus=np.asarray(dpm, dtype=np.int64),
                            a_mat=a_mat, b_mat=b_mat,
                            dropped_childless=dropped, flagged_sibling=flagged)


def _columns_to_csr(n, cols) -> sp.csr_matrix:
    if not cols:
        return sp.csr_matrix((n, 0))
    data = np.concatenate([c.values for c in cols])
    rows = np.concatenate([c.indices for c in cols])
    col_ids = np.concatenate([np.full(c.indices.size, i, dtype=np.int64)
                              for i, c in enumerate(cols)])
    return sp.csr_matrix((data, (rows, col_ids)), shape=(n, len(cols)))


def verify_orthonormal(basis: PseudoEigenbasis) -> float:
    """Largest entrywise deviation of the member Gram matrix from identity."""
    m = basis.size
    if m == 0:
        return 0.0
    ga = (basis.a_mat.T @ basis.a_mat).toarray()
    gb = (basis.b_mat.T @ basis.b_mat).toarray()
    gab = (basis.a_mat.T @ basis.b_mat).toarray()
    gram = np.empty((2 * m, 2 * m))
    for i in range(m):
        for j in range(m):
            for si, srho in enumerate((1.0, -1.0)):
                for sj, ssig in enumerate((1.0, -1.0)):
                    gram[2 * i + si, 2 * j + sj] = (
                        ga[i, j] + srho * ssig * gb[i, j]
                        + ssig * gab[i, j] + srho * gab[j, i])
    return float(np.abs(gram - np.eye(2 * m)).max())


def residual_delta(g_p: SparseGraph, forest: PrunedForest,
                   basis: PseudoEigenbasis, x, sigma):
    """Residual of a displayed-variant member against its star eigenvalue.

    Returns (numeric, closed_form); the two agree entrywise whenever the
    member is parentless or has a smaller sibling.
    """
    if basis.variant != "displayed":
        raise InvalidParameterError("residual identity is stated for the displayed variant")
    i = basis.member_index(x)
    sigma = float(sigma)
    d = int(basis.d_p_minus[i])
    z = float(basis.z[i])
    u = basis.vector(x, sigma)
    ap = g_p.to_scipy()
    numeric = ap @ u - sigma * np.sqrt(d) * u

    n = g_p.n
    pairs = []
    for y in forest.children[x]:
        for c in forest.children[int(y)]:
            pairs.append((int(c), sigma / (np.sqrt(z) * np.sqrt(d))))
        py = int(forest.parent[y])
        if py != x:  # children of x have x as parent in a pruned forest
            raise MultipleParentsError(f"vertex {y} not parented to {x}")
    s = int(forest.sib_minus[x].size)
    if s:
        for y in forest.sib_minus[x]:
            for c in forest.children[int(y)]:
                pairs.append((int(c), -1.0 / (np.sqrt(z) * s)))
        for y in forest.sib_minus[x]:
            pairs.append((int(y), sigma * np.sqrt(d) / (np.sqrt(z) * s)))
    closed = SparseVector.from_pairs(n, pairs)
    numeric_sv = SparseVector.from_pairs(n, [(j, numeric[j]) for j in np.flatnonzero(np.abs(numeric) > 0)])
    return numeric_sv, closed


def projector_apply(basis: PseudoEigenbasis, vec, which="pi") -> np.ndarray:
    """Orthogonal projection onto (or off) the span of the member family."""
    vec = np.asarray(vec, dtype=np.float64)
    alpha, beta = basis.coefficients(vec)
    proj = 2.0 * (basis.a_mat @ alpha + basis.b_mat @ beta)
    if which == "pi":
        return proj
    if which == "pi_bar":
        return vec - proj
    raise InvalidParameterError(f"unknown projector {which!r}")


def signed_star_apply(basis: PseudoEigenbasis, vec) -> np.ndarray:
    """Apply sum over members of sigma sqrt(children) u u* to a vector."""
    vec = np.asarray(vec, dtype=np.float64)
    alpha, beta = basis.coefficients(vec)
    root_d = np.sqrt(basis.d_p_minus.astype(np.float64))
    return 2.0 * (basis.a_mat @ (root_d * beta) + basis.b_mat @ (root_d * alpha))


def block_apply(g_p: SparseGraph, basis: PseudoEigenbasis, vec) -> np.ndarray:
    return block_operator(g_p, basis)(np.asarray(vec, dtype=np.float64))


def block_operator(g_p: SparseGraph, basis: PseudoEigenbasis):
    """Matrix-free block-diagonal approximation of the pruned adjacency."""
    ap = g_p.to_scipy()

    def apply(v):
        v = np.asarray(v, dtype=np.float64)
        out = signed_star_apply(basis, v)
        w = projector_apply(basis, v, "pi_bar")
        out += projector_apply(basis, ap @ w, "pi_bar")
        return out

    return apply


def uv_gap_operator(forest: PrunedForest, basis: PseudoEigenbasis):
    """Difference between the member star operator and its single-star version."""
    n = basis.n
    av_cols, bv_cols = [], []
    for x in basis.vertices:
        x = int(x)
        d = int(forest.d_p_minus[x])
        av_cols.append(SparseVector.from_pairs(n, [(x, 1.0 / np.sqrt(2.0))]))
        bv_cols.append(SparseVector.from_pairs(
            n, [(int(c), 1.0 / np.sqrt(2.0 * d)) for c in forest.children[x]]))
    av = _columns_to_csr(n, av_cols)
    bv = _columns_to_csr(n, bv_cols)
    root_d = np.sqrt(basis.d_p_minus.astype(np.float64))

    def apply(w):
        w = np.asarray(w, dtype=np.float64)
        out = signed_star_apply(basis, w)
        a, b = av.T @ w, bv.T @ w
        out -= 2.0 * (av @ (root_d * b) + bv @ (root_d * a))
        return out

    return apply


def uv_gap_norm(g_p: SparseGraph, forest: PrunedForest, basis: PseudoEigenbasis,
                tol=1e-8, seed=0) -> float:
    from .spectral import operator_norm
    return operator_norm(uv_gap_operator(forest, basis), basis.n, tol=tol, seed=seed)


def appendix_a_operators(forest: PrunedForest, basis: PseudoEigenbasis) -> dict:
    """The four sparse pieces of sum over members of delta_sigma(x) u_sigma(x)*."""
    n = basis.n
    rows = {k: [] for k in ("B1", "B2", "B3", "B4")}
    cols = {k: [] for k in ("B1", "B2", "B3", "B4")}
    vals = {k: [] for k in ("B1", "B2", "B3", "B4")}

    def _add(name, r, c, v):
        rows[name].append(r)
        cols[name].append(c)
        vals[name].append(v)

    for i, x in enumerate(basis.vertices):
        x = int(x)
        z = float(basis.z[i])
        d = int(basis.d_p_minus[i])
        ch_x = forest.children[x]
        for y in ch_x:
            for c in forest.children[int(y)]:
                for cx in ch_x:
                    _add("B1", int(c), int(cx), 2.0 / (z * d))
        sib = forest.sib_minus[x]
        s = int(sib.size)
        if s:
            for y in sib:
                for cx in ch_x:
                    _add("B2", int(y), int(cx), 2.0 / (z * s))
                for c in forest.children[int(y)]:
                    _add("B3", int(c), x, -2.0 / (z * s))
                    for zz in sib:
                        _add("B4", int(c), int(zz), 2.0 / (z * s * s))
    out = {}
    for k in rows:
        out[k] = sp.csr_matrix((vals[k], (rows[k], cols[k])), shape=(n, n))
    return out


def appendix_a_norms(forest: PrunedForest, basis: PseudoEigenbasis,
                     tol=1e-8, seed=0) -> dict:
    from .spectral import operator_norm
    ops = appendix_a_operators(forest, basis)
    return {k: operator_norm(m, basis.n, tol=tol, seed=seed, symmetric=False)
            for k, m in ops.items()}


def gram_schmidt_reference(g_p: SparseGraph, forest: PrunedForest, v_high) -> dict:
    """Literal sequential orthonormalization: the children profiles first,
    then the member indicators in order-descending sequence."""
    if not v_high:
        raise InvalidParameterError("need a nonempty member set")
    n = g_p.n
    key = forest.order.key
    members = sorted((int(x) for x in v_high), key=lambda x: -key[x])
    basis_vecs = []
    for x in members:
        d = int(forest.d_p_minus[x])
        if d < 1:
            continue
        v = np.zeros(n)
        v[forest.children[x]] = 1.0 / np.sqrt(d)
        for b in basis_vecs:
            v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            basis_vecs.append(v / nrm)
    u0 = {}
    for x in members:
        v = np.zeros(n)
        v[x] = 1.0
        for b in basis_vecs:
            v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            v = v / nrm
            basis_vecs.append(v)
            u0[x] = v
    return u0
