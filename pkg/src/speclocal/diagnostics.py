"""Scalar graph functionals paired with their high-probability envelopes.

Each statistic is computed exactly on the sampled graph; the reported
bound is the envelope formula evaluated at (nu, delta, n), recomputed at
call time.  Bounds hold with high probability only, so callers compare
exceedance fractions rather than asserting instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .eigenbasis import PrunedForest
from .graph import DegreeOrder, SparseGraph
from .pruning import PruneResult, VertexPartition
from .weights import WeightSequence

#: the envelope constant "c > 1"; configurable in every call that uses it
DEFAULT_C = 3.0


@dataclass(frozen=True)
class LemmaStat:
    name: str
    values: dict          # vertex -> value (or {-1: scalar})
    bound: float
    exceed_count: int

    @property
    def max_value(self) -> float:
        return max(self.values.values()) if self.values else 0.0


def _rate(n) -> float:
    return math.log(n) / math.log(math.log(n))


def du_count(pr: PruneResult, x) -> int:
    """Size of the down-up removal set of x (computed on the cycle-free graph)."""
    return int(pr.s1_du[x].size)


def du_count_stat(pr: PruneResult, nu, delta, c=DEFAULT_C) -> LemmaStat:
    n = pr.g.n
    bound = c * nu / (1.0 - 2.0 * delta) * _rate(n)
    values = {x: int(pr.s1_du[x].size) for x in range(n)}
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("du_count", values, bound, exceed)


def ncplus_count(pr: PruneResult, ord_: DegreeOrder, x) -> int:
    """Number of greater neighbors surviving cycle removal."""
    nb = pr.g_nc.neighbors(x)
    key = ord_.key
    return int((key[nb] > key[x]).sum())


def ncplus_stat(pr: PruneResult, ord_: DegreeOrder, nu, delta, c=DEFAULT_C) -> LemmaStat:
    n = pr.g.n
    bound = c * nu / (1.0 - delta) * _rate(n)
    values = {x: ncplus_count(pr, ord_, x) for x in range(n)}
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("ncplus_count", values, bound, exceed)


def _du_sets(pr: PruneResult):
    return [set(a.tolist()) for a in pr.s1_du]


def p1_statistic(pr: PruneResult, ord_: DegreeOrder, part: VertexPartition, x1) -> float:
    """Second-moment functional over high-degree triples sharing down-up sets.

    sum over x2, x3 high with x2 smaller than both x1 and x3 of
    |du(x1) & du(x2)| * |(du(x2) - du(x1)) & du(x3)|.
    """
    du = _du_sets(pr)
    key = ord_.key
    high = sorted(part.v_high)
    s1 = du[x1]
    total = 0.0
    # inverted index keeps only x2 candidates actually sharing an element
    for x2 in high:
        if key[x2] >= key[x1]:
            continue
        inter = len(s1 & du[x2])
        if inter == 0:
            continue
        rest = du[x2] - s1
        for x3 in high:
            if key[x2] >= key[x3]:
                continue
            total += inter * len(rest & du[x3])
    return total


def p2_statistic(pr: PruneResult, part: VertexPartition, x1) -> float:
    """Pair overlap functional over the intermediate-degree class."""
    du = _du_sets(pr)
    s1 = du[x1]
    return float(sum(len(s1 & du[x2]) for x2 in sorted(part.v_mid) if x2 != x1))


def p1_stat(pr: PruneResult, ord_: DegreeOrder, part: VertexPartition,
            nu, n) -> LemmaStat:
    bound = 2.0 * nu * _rate(n) ** 2
    values = {x: p1_statistic(pr, ord_, part, x) for x in sorted(part.v_high)}
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("p1_overlap", values, bound, exceed)


def p2_stat(pr: PruneResult, part: VertexPartition, nu, n) -> LemmaStat:
    bound = 2.0 * nu * _rate(n)
    values = {x: p2_statistic(pr, part, x) for x in sorted(part.v_mid)}
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("p2_overlap", values, bound, exceed)


def descending_ball_ratio(forest: PrunedForest, x) -> float:
    """Average number of grandchildren per retained edge below x."""
    d_p = int(forest.d_p_minus[x] + (1 if forest.parent[x] >= 0 else 0))
    if d_p < 1:
        raise ZeroDivisionError(f"vertex {x} is isolated in the forest")
    total = int(sum(forest.d_p_minus[int(y)] for y in forest.children[x]))
    return total / d_p


def descending_ball_stat(forest: PrunedForest, part: VertexPartition,
                         nu, n) -> LemmaStat:
    bound = 3.0 * nu * _rate(n)
    values = {}
    for x in sorted(part.v_high):
        d_p = int(forest.d_p_minus[x] + (1 if forest.parent[x] >= 0 else 0))
        if d_p >= 1:
            values[x] = descending_ball_ratio(forest, x)
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("descending_ball", values, bound, exceed)


def sibling_floor_check(forest: PrunedForest, part: VertexPartition) -> LemmaStat:
    """Smaller-sibling count against half the parent's forest degree."""
    values = {}
    exceed = 0
    for x in sorted(part.v_high):
        p = int(forest.parent[x])
        if p < 0:
            continue
        d_parent = int(forest.d_p_minus[p] + (1 if forest.parent[p] >= 0 else 0))
        slack = forest.sib_minus[x].size - 0.5 * d_parent
        values[x] = float(slack)
        if slack < 0:
            exceed += 1
    return LemmaStat("sibling_floor", values, 0.0, exceed)


def hat_dplus(g: SparseGraph, ws: WeightSequence, x) -> int:
    """Neighbors with weight at least the weight of x."""
    nb = g.neighbors(x)
    return int((ws.w[nb] >= ws.w[x]).sum())


def hat_dplus_stat(g: SparseGraph, ws: WeightSequence, nu, delta) -> LemmaStat:
    n = g.n
    bound = 2.0 * nu / (1.0 - delta) * _rate(n)
    values = {x: hat_dplus(g, ws, x) for x in range(n)}
    exceed = sum(1 for v in values.values() if v > bound)
    return LemmaStat("hat_dplus", values, bound, exceed)
