"""Graph families used by tests, benchmarks and the CLI."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput
from .graph_core import SimpleGraph, exact_min_cut

# planted cuts are checked with the exact solver up to this size
VERIFY_LIMIT = 512


def _from_upper(n: int, rows, cols) -> SimpleGraph:
    """Graph from u < v pairs that are already duplicate-free."""
    rows = np.asarray(rows, dtype=np.int32)
    cols = np.asarray(cols, dtype=np.int32)
    upper = sp.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
    A = (upper + upper.T).tocsr()
    A.sort_indices()
    return SimpleGraph(n, A.indptr, A.indices, check=False)


def gnp(n: int, p: float, rng, with_cycle: bool = False) -> SimpleGraph:
    """Erdos-Renyi G(n, p), optionally unioned with the cycle 0-1-...-(n-1)-0.

    Rows are drawn in slabs so dense graphs never hold more than the final
    CSR arrays plus one slab of coins.
    """
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    slab = max(1, (1 << 22) // max(n, 1))
    rows, cols = [], []
    for start in range(0, n, slab):
        stop = min(n, start + slab)
        hit = rng.random((stop - start, n)) < p
        r, c = np.nonzero(hit)
        r += start
        keep = r < c
        rows.append(r[keep].astype(np.int32))
        cols.append(c[keep].astype(np.int32))
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int32)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int32)
    if with_cycle and n >= 3:
        cu = np.arange(n, dtype=np.int64)
        cv = (cu + 1) % n
        lo, hi = np.minimum(cu, cv), np.maximum(cu, cv)
        key = np.union1d(rows.astype(np.int64) * n + cols, lo * n + hi)
        rows, cols = key // n, key % n
    return _from_upper(n, rows, cols)


def cycle(n: int) -> SimpleGraph:
    if n < 3:
        raise InvalidInput("a cycle needs at least 3 vertices")
    v = np.arange(n)
    return SimpleGraph.from_edges(n, np.stack([v, (v + 1) % n], axis=1))


def path(n: int) -> SimpleGraph:
    if n < 2:
        raise InvalidInput("a path needs at least 2 vertices")
    v = np.arange(n - 1)
    return SimpleGraph.from_edges(n, np.stack([v, v + 1], axis=1))


def complete(n: int) -> SimpleGraph:
    if n < 1:
        raise InvalidInput("need at least one vertex")
    iu, ju = np.triu_indices(n, k=1)
    return SimpleGraph.from_edges(n, np.stack([iu, ju], axis=1))


def near_regular(n: int, d: int, rng) -> SimpleGraph:
    """Union of d/2 random Hamiltonian cycles: every degree in [2, d] and most equal d."""
    if d < 2 or d >= n or n < 3:
        raise InvalidInput("need 2 <= d < n and n >= 3")
    rng = np.random.default_rng(rng)
    parts = []
    for _ in range(d // 2):
        perm = rng.permutation(n)
        parts.append(np.stack([perm, np.roll(perm, -1)], axis=1))
    return SimpleGraph.from_edges(n, np.concatenate(parts))


def barbell(k: int) -> SimpleGraph:
    """Two copies of K_k joined by a single edge."""
    if k < 2:
        raise InvalidInput("cliques need at least 2 vertices")
    iu, ju = np.triu_indices(k, k=1)
    clique = np.stack([iu, ju], axis=1)
    return SimpleGraph.from_edges(2 * k, np.concatenate([clique, clique + k, [[k - 1, k]]]))


def disjoint_union(*graphs: SimpleGraph) -> SimpleGraph:
    parts, offset = [], 0
    for G in graphs:
        parts.append(G.edges() + offset)
        offset += G.n
    return SimpleGraph.from_edges(offset, np.concatenate(parts) if parts else np.zeros((0, 2)))


def planted_cut(n1: int, n2: int, lam: int, density: float, rng, max_tries: int = 50) -> SimpleGraph:
    """Two G(n_i, density) blobs joined by `lam` edges with distinct endpoints.

    Each blob is redrawn until its own edge connectivity exceeds lam, which
    makes the planted cut the unique non-trivial minimum with lam < delta.
    Blob connectivity is checked exactly up to VERIFY_LIMIT vertices, beyond
    that only through the blob minimum degree.
    """
    if lam < 1 or lam > min(n1, n2):
        raise InvalidInput("lam must lie in [1, min(n1, n2)]")
    if lam >= density * (min(n1, n2) - 1):
        raise InvalidInput("lam must stay below the expected intra-blob degree")
    rng = np.random.default_rng(rng)

    def blob(k):
        for _ in range(max_tries):
            B = gnp(k, density, rng)
            if B.degrees.min() <= lam:
                continue
            if k > VERIFY_LIMIT or exact_min_cut(B).value > lam:
                return B
        raise InvalidInput("could not draw a blob with connectivity above lam")

    A, B = blob(n1), blob(n2)
    left = rng.choice(n1, lam, replace=False)
    right = rng.choice(n2, lam, replace=False) + n1
    G = SimpleGraph.from_edges(n1 + n2, np.concatenate([A.edges(), B.edges() + n1,
                                                        np.stack([left, right], axis=1)]))
    if G.n <= VERIFY_LIMIT:
        w = exact_min_cut(G)
        if w.value != lam or min(w.side.sum(), (~w.side).sum()) < 2:
            raise InvalidInput("planted cut is not the minimum")  # unreachable by construction
    return G


def _edge_probability(n, p, degree):
    # gnp takes either p or an expected degree, which keeps sparsity fixed across an n grid
    if (p is None) == (degree is None):
        raise InvalidInput("gnp needs exactly one of p and degree")
    return p if p is not None else min(1.0, degree / max(n - 1, 1))


@dataclass(frozen=True)
class GraphFamily:
    """A named family with keyword parameters, e.g. GraphFamily("cycle", {"n": 8})."""
    name: str
    params: dict = field(default_factory=dict)

    def generate(self, seed=None) -> SimpleGraph:
        return generate(self, seed)


_FAMILIES = {
    "gnp": lambda rng, n, p=None, degree=None, with_cycle=False: gnp(n, _edge_probability(n, p, degree), rng,
                                                                      with_cycle=with_cycle),
    "cycle": lambda rng, n: cycle(n),
    "path": lambda rng, n: path(n),
    "complete": lambda rng, n: complete(n),
    "near_regular": lambda rng, n, d: near_regular(n, d, rng),
    "barbell": lambda rng, k: barbell(k),
    "planted_cut": lambda rng, n1, n2, lam, density: planted_cut(n1, n2, lam, density, rng),
}

FAMILY_NAMES = tuple(_FAMILIES)


def generate(family: GraphFamily, seed=None) -> SimpleGraph:
    try:
        make = _FAMILIES[family.name]
    except KeyError:
        raise InvalidInput(f"unknown graph family {family.name!r}") from None
    try:
        return make(np.random.default_rng(seed), **family.params)
    except TypeError as exc:
        raise InvalidInput(f"bad parameters for {family.name}: {exc}") from None


def sized(family: GraphFamily, n: int) -> GraphFamily:
    """The family with its size parameters set for n vertices."""
    params = dict(family.params)
    if family.name == "planted_cut":
        params["n1"], params["n2"] = n // 2, n - n // 2
    elif family.name == "barbell":
        params["k"] = n // 2
    else:
        params["n"] = n
    return GraphFamily(family.name, params)


def mixed_graphs(count: int, lo: int, hi: int, seed) -> list[tuple[str, SimpleGraph]]:
    """A reproducible mix for exactness campaigns, n log-uniform in [lo, hi].

    Half planted cuts with random sides, cut sizes and blob degrees between 12
    and 48; the rest G(n, p) plus a cycle, near-regular graphs, barbells and a
    few cycles, paths and cliques.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
        kind = rng.choice(["planted", "gnp", "near_regular", "barbell", "small"], p=[0.5, 0.2, 0.15, 0.05, 0.1])
        if kind == "planted":
            n1 = int(rng.integers(max(8, n // 4), n // 2 + 1))
            n2 = n - n1
            side = min(n1, n2) - 1
            density = min(0.95, int(rng.integers(12, 49)) / side)
            lam = int(rng.integers(1, max(2, int(density * side) // 3)))
            out.append((f"planted_cut({n1},{n2},{lam},{density:.2f})", planted_cut(n1, n2, lam, density, rng)))
        elif kind == "gnp":
            deg = rng.uniform(6, 40)
            out.append((f"gnp({n},{deg / (n - 1):.3f})+cycle", gnp(n, min(1.0, deg / (n - 1)), rng, with_cycle=True)))
        elif kind == "near_regular":
            d = 2 * int(rng.integers(2, 13))
            out.append((f"near_regular({n},{d})", near_regular(n, d, rng)))
        elif kind == "barbell":
            k = min(64, n // 2)
            out.append((f"barbell({k})", barbell(k)))
        else:
            which = rng.choice(["cycle", "path", "complete"])
            if which == "complete":
                n = min(n, 64)
            out.append((f"{which}({n})", {"cycle": cycle, "path": path, "complete": complete}[which](n)))
    return out
