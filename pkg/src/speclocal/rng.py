"""Counter-based randomness.

Every draw used by the samplers is a pure function of (seed, key words),
so parallel or re-ordered evaluation reproduces serial results bit for bit.
The generator is the splitmix64 finalizer applied to a keyed chain.
"""

from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)

# Domain constants keep independent draw families from colliding.
DOM_EDGE = 0x01
DOM_SCAN = 0x02
DOM_TREE = 0x03
DOM_TREE_SCAN = 0x04
DOM_START = 0x05


def mix64(z):
    """splitmix64 avalanche of a uint64 word (scalar or ndarray)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def key_hash(seed, *words):
    """Hash a (seed, word, word, ...) key chain to one uint64 per element.

    Words may be scalars or broadcastable integer arrays.
    """
    with np.errstate(over="ignore"):
        h = mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLD)
        for w in words:
            w = np.asarray(w, dtype=np.uint64)
            h = mix64(h ^ (w + _GOLD) * _M1)
    return h


def extend_hash(h, word):
    """Extend a key chain by one word (same step key_hash applies)."""
    with np.errstate(over="ignore"):
        w = np.asarray(word, dtype=np.uint64)
        return mix64(np.uint64(h) ^ (w + _GOLD) * _M1)


def to_unit(h):
    """Map uint64 hashes to floats in the open interval (0, 1)."""
    h = np.asarray(h, dtype=np.uint64)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def pair_uniform(seed, x, y):
    """The per-pair uniform draw: pure function of (seed, min(x,y), max(x,y))."""
    x = np.asarray(x, dtype=np.uint64)
    y = np.asarray(y, dtype=np.uint64)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    return to_unit(key_hash(seed, DOM_EDGE, lo, hi))


def stream_uniform(seed, domain, row, counter):
    """Counter-mode uniform for scan/auxiliary streams keyed by (domain, row, counter)."""
    return to_unit(key_hash(seed, domain, row, counter))


def unit_start_vector(seed, n):
    """Deterministic unit vector used to start iterative eigensolvers."""
    h = key_hash(seed, DOM_START, np.arange(n, dtype=np.uint64))
    v = to_unit(h) - 0.5
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:  # all-equal hashes cannot happen for n >= 2, but stay safe
        v = np.ones(n)
        nrm = float(np.sqrt(n))
    return v / nrm
