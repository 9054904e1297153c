"""Coupled random forests around a root vertex, and the ball embedding.

Nodes of the coupled forests are label paths (x, y1, ..., yd).  An edge to
a child labeled y' is the real-graph indicator exactly when the node sits
on the canonical (lexicographically minimal) shortest path of its endpoint
and y' leaves the current ball; every other edge is an independent
auxiliary Bernoulli keyed by the full label path, so the construction is a
pure function of (graph, seed).  The checked forest zeroes the auxiliary
edges whose endpoints re-enter the ball, which makes it a subforest of the
full one on common nodes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import rng
from .graph import SparseGraph, bfs_distances
from .weights import InvalidParameterError, InvalidVertexError, WeightSequence

DEFAULT_NODE_BUDGET = 100_000


class NotCycleFreeError(RuntimeError):
    """Two distinct short simple paths reach the same vertex."""


@dataclass(frozen=True)
class CoupledTree:
    """Materialized component of the root in one of the two coupled forests."""

    root: int
    kind: str                      # "full_T" or "check_T"
    depth: int
    budget_hit: bool
    children: dict                 # path tuple -> tuple of child labels
    expanded: frozenset            # paths whose children were fully generated

    @property
    def nodes(self) -> set:
        out = set(self.children.keys())
        for path, ch in self.children.items():
            out.update(path + (c,) for c in ch)
        return out

    def child_count(self, path) -> int:
        return len(self.children.get(path, ()))

    def degree(self, path) -> int:
        has_parent = len(path) > 1
        return self.child_count(path) + (1 if has_parent else 0)


@dataclass(frozen=True)
class Embedding:
    root: int
    radius: int
    iota: dict                     # vertex -> path tuple


@dataclass(frozen=True)
class EmbeddingReport:
    passed: bool
    injective: bool
    edge_failures: list
    degree_failures: list
    skipped_budget: int
    checked_vertices: int


def canonical_path(g: SparseGraph, x, y, k):
    """Lexicographically smallest simple path of length exactly k, or None."""
    if k < 1:
        raise InvalidParameterError("path length must be >= 1")
    if not (0 <= x < g.n and 0 <= y < g.n):
        raise InvalidVertexError("endpoint out of range")
    dist_to_y = bfs_distances(g, y, max_depth=k)
    path = [x]
    used = {x}

    def dfs(u, depth):
        remaining = k - depth
        if remaining == 0:
            return u == y
        for v in g.neighbors(u):
            v = int(v)
            if v == y and remaining > 1:
                continue  # y may only appear as the final vertex
            if v in used and not (v == y == x and remaining == 1):
                continue
            if dist_to_y[v] < 0 or dist_to_y[v] > remaining - 1:
                continue
            path.append(v)
            used.add(v)
            if dfs(v, depth + 1):
                return True
            path.pop()
            used.discard(v)
        return False

    if dfs(x, 0):
        return tuple(path)
    return None


class _LexShortestTree:
    """Canonical shortest paths from the root for every vertex in its ball.

    Among all shortest paths, the lexicographically smallest one is obtained
    by ranking each BFS layer: a vertex picks the parent of smallest rank in
    the previous layer, and layers are ordered by (parent rank, label).
    """

    def __init__(self, g: SparseGraph, x, depth):
        self.root = int(x)
        self.dist = bfs_distances(g, x, max_depth=depth)
        self.parent = {int(x): None}
        prank = {int(x): 0}
        order = np.argsort(self.dist, kind="stable")
        layers = {}
        for v in order:
            d = int(self.dist[v])
            if d > 0:
                layers.setdefault(d, []).append(int(v))
        for d in sorted(layers):
            entries = []
            for v in layers[d]:
                cand = [int(u) for u in g.neighbors(v) if self.dist[u] == d - 1]
                best = min(cand, key=lambda u: prank[u])
                self.parent[v] = best
                entries.append((prank[best], v))
            entries.sort()
            for i, (_, v) in enumerate(entries):
                prank[v] = i
        self._cache = {int(x): (int(x),)}

    def path(self, v):
        v = int(v)
        if v in self._cache:
            return self._cache[v]
        p = self.parent[v]
        out = self.path(p) + (v,)
        self._cache[v] = out
        return out


def _aux_children(ws, seed, path_hash, y_k, wsorted, worder, model):
    """Auxiliary-edge children of a node: skip scan at the dominating bound,
    final accept by the per-(path, label) uniform against p / bound."""
    w = ws.w
    s = ws.total
    n = ws.n
    wk = float(w[y_k])
    out = []
    pos = -1
    q = min(1.0, wk * float(wsorted[0]) / s)
    ctr = 0
    log = math.log
    while pos < n - 1 and q > 0.0:
        if q < 1.0:
            u = float(rng.to_unit(rng.extend_hash(rng.extend_hash(path_hash, rng.DOM_TREE_SCAN), ctr)))
            ctr += 1
            pos += 1 + int(log(u) / log(1.0 - q))
        else:
            pos += 1
        if pos >= n:
            break
        yj = int(worder[pos])
        qj = min(1.0, wk * float(wsorted[pos]) / s)
        if qj < q:
            u2 = float(rng.to_unit(rng.extend_hash(rng.extend_hash(path_hash, rng.DOM_TREE_SCAN), ctr)))
            ctr += 1
            landed = u2 < qj / q
        else:
            landed = True
        if landed and yj != y_k:
            wy = float(w[yj])
            if model == "grg":
                p = wk * wy / (s + wk * wy)
            else:
                p = min(wk * wy / s, 1.0)
            if float(rng.to_unit(rng.extend_hash(path_hash, yj))) < p / qj:
                out.append(yj)
        q = qj
    return out


def build_coupled_trees(g: SparseGraph, ws: WeightSequence, x, depth, seed,
                        node_budget=DEFAULT_NODE_BUDGET, model="grg"):
    """Materialize the root components of the coupled forests breadth-first.

    Returns the (full, checked) pair built from shared auxiliary draws.
    """
    if node_budget <= 0:
        raise InvalidParameterError("node budget must be positive")
    if not (0 <= x < g.n):
        raise InvalidVertexError(f"vertex {x} out of range")
    x = int(x)
    dist = bfs_distances(g, x, max_depth=depth)
    lex = _LexShortestTree(g, x, depth)
    worder = np.argsort(-ws.w, kind="stable")
    wsorted = ws.w[worder]

    children_t: dict = {}
    children_c: dict = {}
    expanded = set()
    budget_hit = False
    node_count = 1
    root_path = (x,)
    # queue entries: (path, in_check) with in_check meaning the path is
    # connected to the root inside the checked forest as well
    queue = deque([(root_path, True)])
    while queue:
        path, in_check = queue.popleft()
        k = len(path) - 1
        if k >= depth:
            continue
        if node_count > node_budget:
            budget_hit = True
            break
        y_k = path[-1]
        if k == 0:
            real = [int(v) for v in g.neighbors(x)]
            aux_t, aux_c = [], []
        else:
            on_sphere = 0 <= dist[y_k] == k
            is_canonical = on_sphere and lex.path(y_k) == path
            path_hash = rng.key_hash(seed, rng.DOM_TREE, *path)
            aux = _aux_children(ws, seed, path_hash, y_k, wsorted, worder, model)
            if is_canonical:
                real = [int(v) for v in g.neighbors(y_k)
                        if not (0 <= dist[v] <= k)]
                aux_t = [y for y in aux if 0 <= dist[y] <= k]
                aux_c = []
            else:
                real = []
                aux_t = aux
                aux_c = [y for y in aux if not (0 <= dist[y] <= k)] if on_sphere else []
        ch_t = tuple(sorted(real + aux_t))
        ch_c = tuple(sorted(real + aux_c)) if in_check else ()
        children_t[path] = ch_t
        children_c[path] = ch_c
        expanded.add(path)
        node_count += len(ch_t)
        check_set = set(ch_c)
        for c in ch_t:
            queue.append((path + (c,), c in check_set))

    tree = CoupledTree(root=x, kind="full_T", depth=depth, budget_hit=budget_hit,
                       children=children_t, expanded=frozenset(expanded))
    check = CoupledTree(root=x, kind="check_T", depth=depth, budget_hit=budget_hit,
                        children=children_c, expanded=frozenset(expanded))
    return tree, check


def embed(g_nc: SparseGraph, x, r) -> Embedding:
    """Map the pruned-ball vertices to their unique short path from the root.

    Errors when the ball of radius r in g_nc is not a tree, which means the
    input was not cycle-pruned at this radius.
    """
    if not (0 <= x < g_nc.n):
        raise InvalidVertexError(f"vertex {x} out of range")
    x = int(x)
    parent = {x: None}
    depth = {x: 0}
    iota = {x: (x,)}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if depth[u] >= r:
            continue
        for v in g_nc.neighbors(u):
            v = int(v)
            if v == parent[u]:
                continue
            if v in depth:
                raise NotCycleFreeError(
                    f"two simple paths of length <= {r} reach vertex {v}")
            parent[v] = u
            depth[v] = depth[u] + 1
            iota[v] = iota[u] + (v,)
            queue.append(v)
    return Embedding(root=x, radius=r, iota=iota)


def verify_embedding(g_nc: SparseGraph, x, r, trees) -> EmbeddingReport:
    """Check injectivity, edge preservation into the checked forest, and the
    degree domination chain on the inner ball."""
    tree, check = trees
    emb = embed(g_nc, x, r)
    iota = emb.iota
    injective = len(set(iota.values())) == len(iota)

    edge_failures = []
    skipped = 0
    dom = set(iota)
    for y, py in iota.items():
        for v in g_nc.neighbors(y):
            v = int(v)
            if v not in dom or len(iota[v]) != len(py) + 1:
                continue
            pv = iota[v]
            if pv[:-1] != py:
                edge_failures.append((y, v, "path mismatch"))
                continue
            if py not in check.expanded:
                skipped += 1
                continue
            if v not in check.children.get(py, ()):
                edge_failures.append((y, v, "missing tree edge"))

    degree_failures = []
    checked = 0
    for y, py in iota.items():
        if len(py) - 1 > r - 1:
            continue
        if py not in tree.expanded or py not in check.expanded:
            skipped += 1
            continue
        d_nc = g_nc.degree(y)
        d_check = check.degree(py)
        d_full = tree.degree(py)
        checked += 1
        if not (d_nc <= d_check <= d_full):
            degree_failures.append((y, d_nc, d_check, d_full))

    passed = injective and not edge_failures and not degree_failures
    return EmbeddingReport(passed=passed, injective=injective,
                           edge_failures=edge_failures,
                           degree_failures=degree_failures,
                           skipped_budget=skipped, checked_vertices=checked)
