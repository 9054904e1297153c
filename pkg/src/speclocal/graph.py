"""Random graph sampling and adjacency queries.

Graphs are simple, undirected, stored once as CSR-style sorted neighbor
lists.  Sampling uses weight-sorted skip scanning with the dominating
probability w_x w_y / sum(w); a landed candidate pair is kept when its
counter-based per-pair uniform falls below p_xy / bound, so rejection is
exact and the accept draw for a pair depends only on (seed, x, y).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import rng
from .weights import InvalidParameterError, InvalidVertexError, WeightSequence


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SparseGraph:
    """Symmetric simple-graph adjacency with sorted neighbor lists."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n, edges, validate=True) -> "SparseGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if validate and edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise GraphFormatError("vertex id out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphFormatError("self-loop")
            canon = np.sort(edges, axis=1)
            if len({(int(u), int(v)) for u, v in canon}) != len(canon):
                raise GraphFormatError("duplicate edge")
        both = np.concatenate([edges, edges[:, ::-1]]) if edges.size else edges
        counts = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        if both.size:
            order = np.lexsort((both[:, 1], both[:, 0]))
            indices[:] = both[order, 1]
        return cls(n=n, indptr=indptr, indices=indices)

    @property
    def edge_count(self) -> int:
        return int(self.indices.size // 2)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, x) -> np.ndarray:
        if not (0 <= x < self.n):
            raise InvalidVertexError(f"vertex {x} out of range")
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def degree(self, x) -> int:
        return int(self.indptr[x + 1] - self.indptr[x])

    def has_edge(self, x, y) -> bool:
        nb = self.neighbors(x)
        i = np.searchsorted(nb, y)
        return bool(i < nb.size and nb[i] == y)

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    def remove_edges(self, pairs) -> "SparseGraph":
        """New graph without the given {u, v} pairs (orientation-free)."""
        drop = {(min(u, v), max(u, v)) for u, v in pairs}
        keep = [e for e in self.edges() if (int(e[0]), int(e[1])) not in drop]
        keep = np.asarray(keep, dtype=np.int64).reshape(-1, 2)
        return SparseGraph.from_edges(self.n, keep, validate=False)

    def to_scipy(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()),
                             shape=(self.n, self.n))


@dataclass(frozen=True)
class DegreeOrder:
    """Degree-descending ranking: rank 0 is the greatest vertex.

    x comes before y (is greater) when D_x > D_y, ties broken toward the
    smaller label.  ``pi`` maps rank -> vertex, ``rank`` is its inverse.
    """

    degrees: np.ndarray
    pi: np.ndarray
    rank: np.ndarray

    def prec(self, x, y) -> bool:
        """Strictly-smaller test: D_x < D_y, or equal degrees and x > y."""
        return bool(self.rank[x] > self.rank[y])

    @property
    def key(self) -> np.ndarray:
        """Monotone key: key[x] > key[y] iff x is greater than y in the order."""
        return self.rank.max() - self.rank


def degree_order(g: SparseGraph) -> DegreeOrder:
    deg = g.degrees.astype(np.int64)
    pi = np.lexsort((np.arange(g.n), -deg))
    rank = np.empty(g.n, dtype=np.int64)
    rank[pi] = np.arange(g.n)
    return DegreeOrder(degrees=deg, pi=pi, rank=rank)


def sample_grg(ws: WeightSequence, seed, model="grg") -> SparseGraph:
    """Sample the random graph; deterministic given (ws, seed, model).

    Expected O(E + n log n): vertices are scanned in weight-descending order
    with geometric jumps at the current dominating bound; landings are first
    corrected to the pair's own bound, then accepted with the per-pair draw
    against p_xy / bound.
    """
    if model not in ("grg", "chung_lu"):
        raise InvalidParameterError(f"unknown model {model!r}")
    w = ws.w
    n = ws.n
    s = ws.total
    order = np.argsort(-w, kind="stable")
    wsorted = w[order]
    edges = []
    log = math.log
    for i in range(n - 1):
        vi = int(order[i])
        wi = wsorted[i]
        pos = i
        q = min(1.0, wi * wsorted[i + 1] / s)
        ctr = 0
        while pos < n - 1 and q > 0.0:
            if q < 1.0:
                u = float(rng.stream_uniform(seed, rng.DOM_SCAN, vi, ctr))
                ctr += 1
                gap = int(log(u) / log(1.0 - q))
                pos += 1 + gap
            else:
                pos += 1
            if pos >= n:
                break
            vj = int(order[pos])
            wj = wsorted[pos]
            qj = min(1.0, wi * wj / s)
            # landing ran at intensity q >= qj: thin down to qj first
            if qj < q:
                u2 = float(rng.stream_uniform(seed, rng.DOM_SCAN, vi, ctr))
                ctr += 1
                landed = u2 < qj / q
            else:
                landed = True
            if landed:
                if model == "grg":
                    p = wi * wj / (s + wi * wj)
                else:
                    p = min(wi * wj / s, 1.0)
                if float(rng.pair_uniform(seed, vi, vj)) < p / qj:
                    edges.append((min(vi, vj), max(vi, vj)))
            q = qj
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return SparseGraph.from_edges(n, edges, validate=False)


def split_neighborhood(g: SparseGraph, ord_: DegreeOrder, x):
    """Partition S_1(x) into the greater and smaller neighbors."""
    nb = g.neighbors(x)
    greater = nb[ord_.rank[nb] < ord_.rank[x]]
    smaller = nb[ord_.rank[nb] > ord_.rank[x]]
    return set(int(v) for v in greater), set(int(v) for v in smaller)


def bfs_distances(g: SparseGraph, x, max_depth=None) -> np.ndarray:
    """Graph distances from x (-1 beyond max_depth / unreachable)."""
    if not (0 <= x < g.n):
        raise InvalidVertexError(f"vertex {x} out of range")
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[x] = 0
    queue = deque([x])
    indptr, indices = g.indptr, g.indices
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth is not None and du >= max_depth:
            continue
        for v in indices[indptr[u]:indptr[u + 1]]:
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return dist


def ball(g: SparseGraph, x, r) -> set:
    if r < 0:
        raise InvalidParameterError("radius must be >= 0")
    dist = bfs_distances(g, x, max_depth=r)
    return set(np.flatnonzero(dist >= 0).tolist())


def sphere(g: SparseGraph, x, r) -> set:
    if r < 0:
        raise InvalidParameterError("radius must be >= 0")
    dist = bfs_distances(g, x, max_depth=r)
    return set(np.flatnonzero(dist == r).tolist())


# -- normative test fixtures ------------------------------------------------

def g6() -> SparseGraph:
    """Six vertices, edges {0,4},{0,5},{0,2},{2,1},{1,3}; degrees (3,2,2,1,1,1)."""
    return SparseGraph.from_edges(6, [(0, 4), (0, 5), (0, 2), (2, 1), (1, 3)])


def c5() -> SparseGraph:
    return SparseGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])


def star9() -> SparseGraph:
    """Center 0 with leaves 1..9."""
    return SparseGraph.from_edges(10, [(0, i) for i in range(1, 10)])


def p3() -> SparseGraph:
    return SparseGraph.from_edges(3, [(0, 1), (1, 2)])


def star(deg, center=0, n=None) -> SparseGraph:
    n = n if n is not None else deg + 1
    leaves = [v for v in range(n) if v != center][:deg]
    return SparseGraph.from_edges(n, [(center, v) for v in leaves])


# -- edge-list file format ---------------------------------------------------

def write_edge_list(path, g: SparseGraph) -> None:
    """Header ``n <N> m <M>``, then one ``u v`` line per edge with u < v."""
    e = g.edges()
    with open(path, "w") as fh:
        fh.write(f"n {g.n} m {len(e)}\n")
        for u, v in e:
            fh.write(f"{int(u)} {int(v)}\n")


def read_edge_list(path) -> SparseGraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "n" or header[2] != "m":
            raise GraphFormatError("expected header 'n <N> m <M>'")
        n, m = int(header[1]), int(header[3])
        edges = []
        for line in fh:
            if not line.strip():
                continue
            u, v = map(int, line.split())
            if not u < v:
                raise GraphFormatError(f"edge {u} {v} not in u < v form")
            edges.append((u, v))
    if len(edges) != m:
        raise GraphFormatError(f"header declares {m} edges, file has {len(edges)}")
    return SparseGraph.from_edges(n, edges)
