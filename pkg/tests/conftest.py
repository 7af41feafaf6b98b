import itertools

import numpy as np
import pytest

from cutbench.graph_core import SimpleGraph


def random_graph(rng, n, p):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return SimpleGraph.from_edges(n, edges)


def brute_cut(G, side):
    """Cut size by walking the edge list in plain Python."""
    side = set(int(v) for v in side)
    return sum((a in side) != (b in side) for a, b in G.edges().tolist())


def brute_min_cut(G):
    """Min over all 2^(n-1) - 1 bipartitions with vertex n-1 fixed outside."""
    n = G.n
    best = None
    for k in range(1, n):
        for side in itertools.combinations(range(n - 1), k):
            v = brute_cut(G, side)
            best = v if best is None else min(best, v)
    return best


def components(n, edges):
    """Number of connected components of (range(n), edges), plain DFS."""
    adj = [[] for _ in range(n)]
    for a, b in np.asarray(edges, dtype=np.int64).reshape(-1, 2).tolist():
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * n
    count = 0
    for s in range(n):
        if seen[s]:
            continue
        count += 1
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    return count


def two_cliques(k, bridges):
    """Two copies of K_k joined by `bridges` disjoint edges."""
    inner = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges = inner + [(i + k, j + k) for i, j in inner] + [(i, i + k) for i in range(bridges)]
    return SimpleGraph.from_edges(2 * k, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
