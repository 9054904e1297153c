"""Closed-form tail estimators: incomplete gamma, Poisson intervals,
resonant-set size predictions, coupling error, Stirling ratios.

Everything is offered in linear and log space; the squared window
(lambda - eta)^2 reaches hundreds in the experiments, which overflows the
naive formulas long before it exhausts float64 in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .weights import InvalidParameterError, WeightSequence

_MAX_ITER = 10000
_EPS = 1e-16


class GammaDomainError(ValueError):
    pass


@dataclass(frozen=True)
class GammaValue:
    s: float
    x: float
    value: float


@dataclass(frozen=True)
class WSizeEstimate:
    value: float          # leading term
    log_slack: float      # the (log n)^(2 delta) additive allowance, reported apart


def _regularized_q(s, x):
    """Q(s, x) = Gamma(s, x) / Gamma(s) via series (x < s+1) or continued fraction."""
    if x < 0 or s <= 0:
        raise GammaDomainError("need s > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < s + 1.0:
        # lower series: P = x^s e^-x / Gamma(s) * sum x^k / (s(s+1)...(s+k))
        term = 1.0 / s
        total = term
        for k in range(1, _MAX_ITER):
            term *= x / (s + k)
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        else:
            raise GammaDomainError("series did not converge")
        logp = s * math.log(x) - x - math.lgamma(s) + math.log(total)
        return max(0.0, 1.0 - math.exp(logp))
    # Lentz continued fraction for Q
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise GammaDomainError("continued fraction did not converge")
    logq = s * math.log(x) - x - math.lgamma(s) + math.log(h)
    return math.exp(logq)


def upper_incomplete_gamma(s, x) -> float:
    """Gamma(s, x) = integral from x to infinity of t^(s-1) e^-t dt."""
    q = _regularized_q(s, x)
    val = q * math.exp(math.lgamma(s))
    if math.isinf(val):
        raise OverflowError("use log_upper_incomplete_gamma for this range")
    return val


def log_upper_incomplete_gamma(s, x) -> float:
    q = _regularized_q(s, x)
    if q == 0.0:
        return -math.inf
    return math.log(q) + math.lgamma(s)


def upper_incomplete_gamma_int(n, x) -> float:
    """Closed form for integer order: (n-1)! e^-x sum_{k<n} x^k / k!.

    Accumulated in log space; this is the reference path for the
    series/continued-fraction implementation.
    """
    if n < 1 or n != int(n) or n > 10**6:
        raise GammaDomainError("integer order must satisfy 1 <= n <= 1e6")
    n = int(n)
    if x < 0:
        raise GammaDomainError("x must be >= 0")
    if x == 0:
        return math.exp(math.lgamma(n))
    logx = math.log(x)
    logs = [-x + k * logx - math.lgamma(k + 1) for k in range(n)]
    peak = max(logs)
    acc = sum(math.exp(v - peak) for v in logs)
    return math.exp(math.lgamma(n) + peak + math.log(acc))


def poisson_cdf(k, w) -> float:
    """P(Poisson(w) <= k) = Gamma(k+1, w) / Gamma(k+1); zero for k < 0."""
    if k < 0:
        return 0.0
    return _regularized_q(k + 1.0, w)


def poisson_interval_prob(w, lo, hi=None) -> float:
    """P(lo <= Poisson(w) <= hi); hi=None means no upper cap."""
    if w <= 0:
        raise InvalidParameterError("Poisson mean must be positive")
    if lo < 0 or (hi is not None and hi < lo):
        raise InvalidParameterError("invalid interval")
    upper = 1.0 if hi is None else poisson_cdf(hi, w)
    return max(0.0, upper - poisson_cdf(lo - 1, w))


def poisson_coupling_tv_bound(ws: WeightSequence, x) -> float:
    """Failure bound of the degree-to-Poisson coupling at vertex x."""
    from .weights import empirical_moment
    m1 = empirical_moment(ws, 1)
    m2 = empirical_moment(ws, 2)
    wx = float(ws.w[x])
    return wx * wx / (m1 * ws.n) * (1.0 + 2.0 * m2 / m1)


def window_bounds(lam, eta):
    """Integer window (L, U) = (floor((lam-eta)^2), ceil((lam+eta)^2))."""
    if not lam > eta >= 0:
        raise InvalidParameterError("need lambda > eta >= 0")
    return math.floor((lam - eta) ** 2), math.ceil((lam + eta) ** 2)


def expected_w_generic(ws: WeightSequence, lam, eta) -> float:
    """Second-moment bound on the expected resonant count."""
    from .weights import empirical_moment
    if not lam > eta:
        raise InvalidParameterError("need lambda > eta")
    m2 = empirical_moment(ws, 2)
    return m2 * ws.n / (lam - eta) ** 4


def expected_w_exponential(n, alpha, lam, eta, delta=0.1) -> WSizeEstimate:
    """Leading resonant-count term for exponential quantile weights."""
    if alpha <= 0 or not lam > eta >= 0:
        raise InvalidParameterError("need alpha > 0 and lambda > eta >= 0")
    lo, _ = window_bounds(lam, eta)
    log_value = math.log(n) + math.log(alpha) - (lo - 1) * math.log(alpha + 1.0)
    return WSizeEstimate(value=math.exp(log_value),
                         log_slack=math.log(n) ** (2.0 * delta))


def expected_w_powerlaw(n, alpha, lam, eta, delta=0.1) -> WSizeEstimate:
    """Leading resonant-count term for power-law quantile weights (bounded
    slowly varying part)."""
    if alpha <= 2 or not lam > eta >= 0:
        raise InvalidParameterError("need alpha > 2 and lambda > eta >= 0")
    value = n * eta / lam ** (2.0 * alpha + 3.0)
    return WSizeEstimate(value=value, log_slack=math.log(n) ** (2.0 * delta))


def stirling_ratio(x, t):
    """Exact Gamma(x-t)/Gamma(x) next to its first-order approximation.

    Returns (exact, approx, relative_error) with approx = x^-t e^(-t/2x).
    """
    if not (x > t >= 0) or x - t <= 0:
        raise GammaDomainError("need x > t >= 0")
    exact = math.exp(math.lgamma(x - t) - math.lgamma(x))
    approx = x ** (-t) * math.exp(-t / (2.0 * x))
    rel = abs(exact - approx) / abs(exact)
    return exact, approx, rel


def gamma_sandwich_check(s, x) -> bool:
    """Gamma(s) - x^(s-1) <= Gamma(s, x) <= Gamma(s) for s >= 1, x > 0."""
    if s < 1 or x <= 0:
        raise GammaDomainError("need s >= 1 and x > 0")
    g = math.exp(math.lgamma(s))
    gx = upper_incomplete_gamma(s, x)
    lower = g - x ** (s - 1.0)
    return lower <= gx <= g * (1.0 + 1e-12)
