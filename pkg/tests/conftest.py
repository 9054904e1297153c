import warnings

import pytest

from speclocal import graph as G
from speclocal import weights as W


@pytest.fixture(autouse=True)
def _quiet_small_radius():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


@pytest.fixture
def g6():
    return G.g6()


@pytest.fixture
def c5():
    return G.c5()


@pytest.fixture
def star9():
    return G.star9()


@pytest.fixture
def p3():
    return G.p3()


def random_graph(n, seed, alpha=2.5, kind="powerlaw"):
    if kind == "powerlaw":
        ws = W.make_power_law_quantile(n, alpha)
    else:
        ws = W.make_exponential_quantile(n, alpha)
    return ws, G.sample_grg(ws, seed)


def brute_simple_loops_first_step(g, x, max_len):
    """All first steps y of simple loops through x with length <= max_len.

    Exhaustive DFS over simple paths; loops have distinct interior vertices
    and length >= 3 (no edge reuse in a simple graph).
    """
    out = set()
    nbrs = [int(v) for v in g.neighbors(x)]

    def dfs(u, visited, length):
        if length >= max_len:
            return False
        for v in g.neighbors(u):
            v = int(v)
            if v == x:
                if length + 1 >= 3:
                    return True
                continue
            if v in visited:
                continue
            if dfs(v, visited | {v}, length + 1):
                return True
        return False

    for y in nbrs:
        # force first step through y
        if dfs(y, {x, y}, 1):
            out.add(y)
    return out


def brute_down_up_sets(g_nc, order):
    """Literal scan of eq-style sets: y below x with a strict up-escape."""
    key = order.key
    n = g_nc.n
    out = [set() for _ in range(n)]
    for x in range(n):
        for y in g_nc.neighbors(x):
            y = int(y)
            if key[y] >= key[x]:
                continue
            for z in g_nc.neighbors(y):
                z = int(z)
                if key[z] > key[x]:
                    out[x].add(y)
                    break
    return out
