"""Weight sequences: construction, empirical moments, expected degrees, envelopes.

A weight sequence carries the vertex weights together with the two exponents
(epsilon, delta) that parameterize the regime checks.  Vertices are 0-based;
the quantile formulas use the 1-based position x = index + 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

DEFAULT_EPSILON = 0.1
DEFAULT_DELTA = 0.1

#: quadratic-cost guard for exact expected degrees
EXACT_DEGREE_BUDGET = 20000


class InvalidParameterError(ValueError):
    pass


class BudgetExceededError(RuntimeError):
    pass


class InvalidVertexError(IndexError):
    pass


@dataclass(frozen=True)
class WeightSequence:
    """Strictly positive vertex weights with the model exponents."""

    w: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if w.ndim != 1 or w.size < 2:
            raise InvalidParameterError("need at least 2 vertices")
        if not np.all(w > 0):
            raise InvalidParameterError("all weights must be strictly positive")
        if not (0 < self.epsilon < 0.5):
            raise InvalidParameterError("epsilon must lie in (0, 1/2)")
        if not (0 < self.delta < 1 / 3):
            raise InvalidParameterError("delta must lie in (0, 1/3)")

    @property
    def n(self) -> int:
        return int(self.w.size)

    @property
    def total(self) -> float:
        return float(self.w.sum())


@dataclass(frozen=True)
class EmpiricalMoments:
    m1: float
    m2: float
    mk: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AssumptionReport:
    max_weight_ok: bool
    m1_ok: bool
    ratio: float
    ratio_log_exponent: float


def make_power_law_quantile(n, alpha, c=1.0, epsilon=DEFAULT_EPSILON,
                            delta=DEFAULT_DELTA, warn_only=False) -> WeightSequence:
    """Quantile weights of a power law tail: w_x = c ((n+1)/x)^(1/alpha).

    alpha <= 2 leaves the finite-second-moment regime; it is rejected unless
    ``warn_only`` is set (used by experiments probing the boundary).
    """
    if n < 2 or c <= 0:
        raise InvalidParameterError("need n >= 2 and c > 0")
    if alpha <= 2:
        if not warn_only:
            raise InvalidParameterError("power-law exponent must satisfy alpha > 2")
        warnings.warn(f"alpha={alpha} <= 2: second moment diverges", stacklevel=2)
    if alpha <= 0:
        raise InvalidParameterError("alpha must be positive")
    x = np.arange(1, n + 1, dtype=np.float64)
    w = c * ((n + 1.0) / x) ** (1.0 / alpha)
    return WeightSequence(w, epsilon, delta)


def make_exponential_quantile(n, alpha, epsilon=DEFAULT_EPSILON,
                              delta=DEFAULT_DELTA) -> WeightSequence:
    """Quantile weights of the exponential law: w_x = (1/alpha) log((n+1)/x)."""
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    if alpha <= 0:
        raise InvalidParameterError("rate alpha must be positive")
    x = np.arange(1, n + 1, dtype=np.float64)
    w = np.log((n + 1.0) / x) / alpha
    return WeightSequence(w, epsilon, delta)


def make_iid(n, dist, seed, epsilon=DEFAULT_EPSILON, delta=DEFAULT_DELTA) -> WeightSequence:
    """Independent weights with a named law; deterministic given the seed.

    ``dist`` is ("power_law", alpha, c) or ("exponential", alpha).
    """
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    rng = np.random.default_rng(seed)
    kind = dist[0]
    if kind == "power_law":
        _, alpha, c = dist
        if alpha <= 0 or c <= 0:
            raise InvalidParameterError("power_law needs alpha > 0 and c > 0")
        # tail P(w >= t) = (c/t)^alpha for t >= c; inverse-CDF sampling
        u = rng.random(n)
        w = c * u ** (-1.0 / alpha)
    elif kind == "exponential":
        _, alpha = dist
        if alpha <= 0:
            raise InvalidParameterError("exponential needs alpha > 0")
        w = rng.exponential(scale=1.0 / alpha, size=n)
        w = np.maximum(w, 1e-300)  # the law gives w > 0 a.s.; guard exact zeros
    else:
        raise InvalidParameterError(f"unknown distribution kind {kind!r}")
    return WeightSequence(w, epsilon, delta)


def empirical_moment(ws: WeightSequence, k) -> float:
    """k-th empirical moment (1/n) sum_x w_x^k."""
    if k < 1:
        raise InvalidParameterError("moment order must be >= 1")
    return float(np.mean(ws.w ** k))


def empirical_moments(ws: WeightSequence, orders=()) -> EmpiricalMoments:
    mk = {int(k): empirical_moment(ws, k) for k in orders}
    return EmpiricalMoments(m1=empirical_moment(ws, 1), m2=empirical_moment(ws, 2), mk=mk)


def check_assumptions(ws: WeightSequence) -> AssumptionReport:
    """Report (never abort) whether the weight sequence sits in the model regime."""
    n = ws.n
    m1 = empirical_moment(ws, 1)
    m2 = empirical_moment(ws, 2)
    ratio = m2 / m1
    max_weight_ok = bool(np.all(ws.w <= n ** (0.5 - ws.epsilon)))
    m1_ok = bool(m1 >= n ** (-ws.epsilon))
    if n >= 3 and math.log(n) > 1:
        ratio_log_exponent = math.log(ratio) / math.log(math.log(n))
    else:
        ratio_log_exponent = float("nan")
    return AssumptionReport(max_weight_ok, m1_ok, ratio, ratio_log_exponent)


def edge_probability(ws: WeightSequence, x, y, model="grg") -> float:
    """Probability of the edge {x, y} under the chosen model."""
    n = ws.n
    if x == y or not (0 <= x < n) or not (0 <= y < n):
        raise InvalidVertexError(f"invalid pair ({x}, {y})")
    wx, wy = float(ws.w[x]), float(ws.w[y])
    s = ws.total
    if model == "grg":
        return wx * wy / (s + wx * wy)
    if model == "chung_lu":
        return min(wx * wy / s, 1.0)
    raise InvalidParameterError(f"unknown model {model!r}")


def expected_degrees(ws: WeightSequence, mode="exact",
                     budget=EXACT_DEGREE_BUDGET) -> np.ndarray:
    """Expected degrees d_x, either by exact pair summation or first-order formula.

    exact: d_x = sum_{y != x} w_x w_y / (sum_z w_z + w_x w_y), O(n^2) and guarded.
    approx: d_x = w_x (1 - w_x / sum_z w_z), with O(n^{-epsilon}) relative error.
    """
    w = ws.w
    n = ws.n
    s = ws.total
    if mode == "approx":
        return w * (1.0 - w / s)
    if mode != "exact":
        raise InvalidParameterError(f"unknown mode {mode!r}")
    if n > budget:
        raise BudgetExceededError(f"exact mode is quadratic; n={n} exceeds budget {budget}")
    d = np.empty(n)
    block = max(1, min(n, 8_000_000 // max(n, 1) + 1))
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        prod = np.outer(w[lo:hi], w)
        p = prod / (s + prod)
        rows = np.arange(lo, hi)
        p[rows - lo, rows] = 0.0
        d[lo:hi] = p.sum(axis=1)
    return d


def bennett_envelope(d, nu, n):
    """Two-sided concentration envelope for an observed degree with mean d."""
    if d < 0 or nu <= 0 or n < 3:
        raise InvalidParameterError("need d >= 0, nu > 0, n >= 3")
    logn = math.log(n)
    lower = d - math.sqrt(2.0 * nu * d * logn)
    upper = d + 2.0 * math.sqrt(nu * logn * max(d, (4.0 * nu / 9.0) * logn))
    return lower, upper


def write_weights(path, ws: WeightSequence) -> None:
    """Plain-text weight file: one decimal real per line, line i = w_i."""
    with open(path, "w") as fh:
        for v in ws.w:
            fh.write(repr(float(v)) + "\n")


def read_weights(path, epsilon=DEFAULT_EPSILON, delta=DEFAULT_DELTA) -> WeightSequence:
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip()]
    return WeightSequence(np.asarray(vals), epsilon, delta)
