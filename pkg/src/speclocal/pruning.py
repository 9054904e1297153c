"""Two-step graph pruning: short-cycle edge removal, then down-up removal.

Step 1 removes every edge lying on a simple loop of length at most 2r+1
(equivalently: y is a cycle-neighbor of x iff a second x-y path of length
at most 2r exists once the edge is ignored).  Step 2 removes, on the
cycle-free graph, the bottom edge of every down-up pattern (x, y, z) with
y smaller than x smaller than z in the degree order.  The result is a
forest without down-up paths; removal sets are computed before any edge
is deleted, so the output does not depend on removal order.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import DegreeOrder, SparseGraph
from .weights import InvalidParameterError, InvalidVertexError, WeightSequence

DEFAULT_RADIUS = 6


class PruningInvariantError(RuntimeError):
    """A deterministic consequence of the pruning definition failed."""


@dataclass(frozen=True)
class PruneResult:
    g: SparseGraph
    g_nc: SparseGraph
    g_p: SparseGraph
    s1_cyc: list          # per vertex: sorted array of cycle-neighbors
    s1_du: list           # per vertex: sorted array, the down-up set on g_nc
    removed_du: list      # per vertex: all neighbors lost in step 2
    r: int
    xi: float | None

    def degree_loss(self) -> np.ndarray:
        return self.g.degrees - self.g_p.degrees


@dataclass(frozen=True)
class VertexPartition:
    v_low: set
    v_mid: set
    v_high: set


@dataclass(frozen=True)
class DegreeLossStats:
    loss: np.ndarray
    max_loss: int
    histogram: np.ndarray
    flagged: np.ndarray   # vertices with loss > xi/2 (empty if xi unknown)


def xi_threshold(nu, delta, n) -> float:
    """Degree threshold of order log n / log log n separating high vertices."""
    if n < 16:
        raise InvalidParameterError("need n >= 16 so that log log n > 1")
    if not (0 < delta < 1 / 3) or nu <= 0:
        raise InvalidParameterError("need 0 < delta < 1/3 and nu > 0")
    pref = 3.0 * (nu + 1.0) * (2.0 - 3.0 * delta) / ((1.0 - delta) * (1.0 - 2.0 * delta))
    return pref * math.log(n) / math.log(math.log(n))


def cyc_neighbors(g: SparseGraph, x, r) -> set:
    """Neighbors of x that start a simple loop through x of length <= 2r+1.

    BFS from each neighbor y inside G minus {x}, depth capped at 2r-1, with
    early exit once another neighbor of x is reached.
    """
    if r < 2:
        raise InvalidParameterError("radius must be >= 2")
    if not (0 <= x < g.n):
        raise InvalidVertexError(f"vertex {x} out of range")
    nbrs = g.neighbors(x)
    nbr_set = set(int(v) for v in nbrs)
    out = set()
    cap = 2 * r - 1
    indptr, indices = g.indptr, g.indices
    for y in nbrs:
        y = int(y)
        dist = {y: 0}
        queue = deque([y])
        hit = False
        while queue and not hit:
            u = queue.popleft()
            du = dist[u]
            if du >= cap:
                continue
            for v in indices[indptr[u]:indptr[u + 1]]:
                v = int(v)
                if v == x or v in dist:
                    continue
                dist[v] = du + 1
                if v in nbr_set:
                    hit = True
                    break
                queue.append(v)
        if hit:
            out.add(y)
    return out


def _bridges(g: SparseGraph) -> set:
    """Bridge edges as canonical (u, v) pairs, via iterative low-link DFS."""
    n = g.n
    indptr, indices = g.indptr, g.indices
    disc = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    pos = indptr[:-1].copy()
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        stack = [root]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            u = stack[-1]
            if pos[u] < indptr[u + 1]:
                v = int(indices[pos[u]])
                pos[u] += 1
                if disc[v] < 0:
                    parent[v] = u
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append(v)
                elif v != parent[u]:
                    low[u] = min(low[u], disc[v])
            else:
                stack.pop()
                p = parent[u]
                if p >= 0:
                    low[p] = min(low[p], low[u])
                    if low[u] > disc[p]:
                        bridges.add((min(p, u), max(p, u)))
    return bridges


def _two_edge_components(g: SparseGraph, bridges) -> np.ndarray:
    comp = np.full(g.n, -1, dtype=np.int64)
    indptr, indices = g.indptr, g.indices
    cid = 0
    for root in range(g.n):
        if comp[root] >= 0:
            continue
        comp[root] = cid
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                v = int(v)
                if comp[v] >= 0 or (min(u, v), max(u, v)) in bridges:
                    continue
                comp[v] = cid
                queue.append(v)
        cid += 1
    return comp


def short_cycle_edges(g: SparseGraph, r) -> set:
    """Edges lying on a simple cycle of length <= 2r+1.

    Bridges never qualify.  For the rest, the edge {u, v} qualifies iff the
    endpoints are joined by a second path of length <= 2r, decided by two
    depth-r BFS runs (from u and from v, edge excluded) inside the edge's
    two-edge-connected component.
    """
    if r < 2:
        raise InvalidParameterError("radius must be >= 2")
    bridges = _bridges(g)
    comp = _two_edge_components(g, bridges)
    n = g.n
    indptr, indices = g.indptr, g.indices
    du = np.full(n, -1, dtype=np.int64)
    dv = np.full(n, -1, dtype=np.int64)
    stamp_u = np.zeros(n, dtype=np.int64)
    stamp_v = np.zeros(n, dtype=np.int64)
    tick = 0
    out = set()
    limit = 2 * r

    def _bfs(src, skip_a, skip_b, cval, dist, stamp, t):
        dist[src] = 0
        stamp[src] = t
        queue = deque([src])
        while queue:
            a = queue.popleft()
            da = dist[a]
            if da >= r:
                continue
            for b in indices[indptr[a]:indptr[a + 1]]:
                b = int(b)
                if comp[b] != cval or (a == skip_a and b == skip_b) or (a == skip_b and b == skip_a):
                    continue
                if stamp[b] == t:
                    continue
                stamp[b] = t
                dist[b] = da + 1
                queue.append(b)

    for u, v in g.edges():
        u, v = int(u), int(v)
        if (u, v) in bridges:
            continue
        tick += 1
        cval = comp[u]
        _bfs(u, u, v, cval, du, stamp_u, tick)
        _bfs(v, u, v, cval, dv, stamp_v, tick)
        seen = np.flatnonzero((stamp_u == tick) & (stamp_v == tick))
        if seen.size and int((du[seen] + dv[seen]).min()) <= limit:
            out.add((u, v))
    return out


def prune(g: SparseGraph, ord_: DegreeOrder, r=DEFAULT_RADIUS, xi=None) -> PruneResult:
    """Run both pruning steps and return the full removal ledger."""
    if r < 2:
        raise InvalidParameterError("radius must be >= 2")
    if r < DEFAULT_RADIUS:
        warnings.warn(f"pruning radius r={r} below the default {DEFAULT_RADIUS}",
                      stacklevel=2)
    n = g.n
    cyc = short_cycle_edges(g, r)
    s1_cyc = [[] for _ in range(n)]
    for u, v in cyc:
        s1_cyc[u].append(v)
        s1_cyc[v].append(u)
    s1_cyc = [np.asarray(sorted(a), dtype=np.int64) for a in s1_cyc]
    g_nc = g.remove_edges(cyc)

    key = ord_.key
    # maxup[y]: largest order key among the nc-neighbors of y
    maxup = np.full(n, -1, dtype=np.int64)
    for y in range(n):
        nb = g_nc.neighbors(y)
        if nb.size:
            maxup[y] = key[nb].max()
    s1_du = []
    du_edges = set()
    for x in range(n):
        nb = g_nc.neighbors(x)
        sel = nb[(key[nb] < key[x]) & (maxup[nb] > key[x])]
        s1_du.append(sel.copy())
        for y in sel:
            du_edges.add((min(x, int(y)), max(x, int(y))))
    g_p = g_nc.remove_edges(du_edges)

    removed_du = [[] for _ in range(n)]
    for u, v in du_edges:
        removed_du[u].append(v)
        removed_du[v].append(u)
    removed_du = [np.asarray(sorted(a), dtype=np.int64) for a in removed_du]

    _check_step2_identity(g_nc, g_p, key, s1_du)
    return PruneResult(g=g, g_nc=g_nc, g_p=g_p, s1_cyc=s1_cyc, s1_du=s1_du,
                       removed_du=removed_du, r=r, xi=xi)


def _check_step2_identity(g_nc, g_p, key, s1_du):
    # Step 2 keeps exactly one upper neighbor (the greatest) when several
    # exist: D_p = D_nc - |du set| - (up-degree - 1)^+ must hold per vertex.
    d_nc = g_nc.degrees
    d_p = g_p.degrees
    for x in range(g_nc.n):
        nb = g_nc.neighbors(x)
        up = int((key[nb] > key[x]).sum())
        expected = int(d_nc[x]) - len(s1_du[x]) - max(up - 1, 0)
        if int(d_p[x]) != expected:
            raise PruningInvariantError(
                f"degree identity failed at vertex {x}: {int(d_p[x])} != {expected}")
        if up:
            kept_up = nb[(key[nb] > key[x]) & np.isin(nb, g_p.neighbors(x))]
            best = nb[key[nb] > key[x]][np.argmax(key[nb[key[nb] > key[x]]])]
            if kept_up.size != 1 or int(kept_up[0]) != int(best):
                raise PruningInvariantError(f"keep-max violated at vertex {x}")


def verify_forest(g_p: SparseGraph) -> bool:
    """Union-find acyclicity check."""
    parent = list(range(g_p.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in g_p.edges():
        ru, rv = find(int(u)), find(int(v))
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def verify_no_down_up(g_p: SparseGraph, ord_: DegreeOrder) -> bool:
    key = ord_.key
    for y in range(g_p.n):
        nb = g_p.neighbors(y)
        above = key[nb][key[nb] > key[y]]
        # a down-up pair through y exists iff two neighbors exceed y
        if above.size >= 2:
            return False
    return True


def degree_loss_stats(pr: PruneResult) -> DegreeLossStats:
    loss = pr.degree_loss()
    max_loss = int(loss.max()) if loss.size else 0
    hist = np.bincount(loss, minlength=max_loss + 1)
    if pr.xi is not None:
        flagged = np.flatnonzero(loss > pr.xi / 2.0)
    else:
        flagged = np.empty(0, dtype=np.int64)
    return DegreeLossStats(loss=loss, max_loss=max_loss, histogram=hist, flagged=flagged)


def vertex_partition(g: SparseGraph, ws: WeightSequence, xi) -> VertexPartition:
    """Split vertices by degree against xi, and weight against 4 xi."""
    if xi <= 0:
        raise InvalidParameterError("xi must be positive")
    deg = g.degrees
    w = ws.w
    high = deg >= xi
    mid = ~high & (w > 4.0 * xi)
    low = ~high & ~mid
    return VertexPartition(
        v_low=set(np.flatnonzero(low).tolist()),
        v_mid=set(np.flatnonzero(mid).tolist()),
        v_high=set(np.flatnonzero(high).tolist()),
    )
