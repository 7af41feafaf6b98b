"""Ground-truth graphs, union-find partitions, exact min cut and explicit certificates."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InvalidInput


class SimpleGraph:
    """Immutable undirected simple graph in CSR form (sorted neighbour lists)."""

    __slots__ = ("n", "indptr", "indices", "degrees", "_matrix", "_edges", "_keys")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray, check: bool = True):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.degrees = np.diff(self.indptr)
        self._matrix = None
        self._edges = None
        self._keys = None
        if check:
            self._check()
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.degrees.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "SimpleGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise InvalidInput("vertex id out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise InvalidInput("self-loop in edge list")
        u = np.minimum(e[:, 0], e[:, 1])
        v = np.maximum(e[:, 0], e[:, 1])
        key = np.unique(u * n + v)
        u, v = key // n, key % n
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return cls(n, np.cumsum(indptr), dst)

    def _check(self):
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0:
            raise InvalidInput("bad indptr")
        if self.indices.size != self.indptr[-1]:
            raise InvalidInput("bad indices length")
        if self.indices.size == 0:
            return
        if self.indices.min() < 0 or self.indices.max() >= self.n:
            raise InvalidInput("vertex id out of range")
        rows = np.repeat(np.arange(self.n), self.degrees)
        if np.any(rows == self.indices):
            raise InvalidInput("self-loop")
        # sorted, duplicate-free rows
        key = rows * self.n + self.indices
        if np.any(np.diff(key) <= 0):
            raise InvalidInput("neighbour lists must be sorted without duplicates")
        back = np.sort(self.indices * self.n + rows)
        if not np.array_equal(back, key):
            raise InvalidInput("adjacency is not symmetric")

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, sorted."""
        if self._edges is None:
            rows = np.repeat(np.arange(self.n), self.degrees)
            keep = rows < self.indices
            self._edges = np.stack([rows[keep], self.indices[keep]], axis=1)
            self._edges.setflags(write=False)
        return self._edges

    def has_edges(self, pairs) -> np.ndarray:
        """Vectorised has_edge over an (k, 2) array."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if self._keys is None:
            e = self.edges()
            self._keys = e[:, 0] * self.n + e[:, 1]
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        want = lo * self.n + hi
        if self._keys.size == 0:
            return np.zeros(want.size, dtype=bool)
        pos = np.minimum(np.searchsorted(self._keys, want), self._keys.size - 1)
        return (self._keys[pos] == want) & (lo != hi)

    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            data = np.ones(self.indices.size, dtype=np.int64)
            self._matrix = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._matrix

    def cut_value(self, side) -> int:
        side = as_mask(side, self.n)
        e = self.edges()
        return int(np.count_nonzero(side[e[:, 0]] != side[e[:, 1]]))

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, m={self.m})"


def as_mask(S, n: int) -> np.ndarray:
    if isinstance(S, np.ndarray) and S.dtype == np.bool_:
        if S.shape != (n,):
            raise InvalidInput("mask has wrong length")
        return S
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(S) if isinstance(S, (set, frozenset)) else S, dtype=np.int64).ravel()
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise InvalidInput("vertex id out of range")
        mask[idx] = True
    return mask


class VertexPartition:
    """Union-find over [0, n) with path halving and union by size."""

    def __init__(self, n: int):
        self.n = n
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)
        self.blocks = n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.blocks -= 1
        return True

    def union_edges(self, edges) -> int:
        merged = 0
        for a, b in np.asarray(edges, dtype=np.int64).reshape(-1, 2):
            merged += self.union(a, b)
        return merged

    def roots(self) -> np.ndarray:
        p = self.parent
        while True:
            pp = p[p]
            if np.array_equal(pp, p):
                break
            p = pp
        self.parent = p.copy()
        return p

    def labels(self) -> np.ndarray:
        """Block labels 0..blocks-1, numbered by smallest member."""
        roots = self.roots()
        _, first, inv = np.unique(roots, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first)] = np.arange(first.size)
        return rank[inv]

    def block_lists(self) -> list[np.ndarray]:
        lab = self.labels()
        order = np.argsort(lab, kind="stable")
        return np.split(order, np.cumsum(np.bincount(lab, minlength=self.blocks))[:-1])

    def copy(self) -> "VertexPartition":
        out = VertexPartition(self.n)
        out.parent = self.parent.copy()
        out.size = self.size.copy()
        out.blocks = self.blocks
        return out

    @classmethod
    def from_labels(cls, labels) -> "VertexPartition":
        labels = np.asarray(labels, dtype=np.int64)
        part = cls(labels.size)
        _, first = np.unique(labels, return_index=True)
        rep = np.full(labels.max() + 1 if labels.size else 0, -1, dtype=np.int64)
        rep[labels[first]] = first
        part.parent = rep[labels].copy()
        part.size = np.bincount(part.parent, minlength=labels.size).astype(np.int64)
        part.blocks = int(first.size)
        return part


@dataclass
class CutWitness:
    value: int
    side: np.ndarray = field(repr=False)

    def check(self, G: SimpleGraph) -> bool:
        k = int(self.side.sum())
        return 0 < k < G.n and G.cut_value(self.side) == self.value


@dataclass
class CertificateForests:
    forests: list
    labels: np.ndarray = field(repr=False)

    @property
    def r(self) -> int:
        return len(self.forests)

    def edges(self) -> np.ndarray:
        if not self.forests:
            return np.zeros((0, 2), dtype=np.int64)
        return np.concatenate([np.asarray(f, dtype=np.int64).reshape(-1, 2) for f in self.forests])

    def cut_value(self, side) -> int:
        e = self.edges()
        side = np.asarray(side, dtype=bool)
        return int(np.count_nonzero(side[e[:, 0]] != side[e[:, 1]]))

    def is_laminar(self) -> bool:
        """Forests are edge-disjoint, acyclic over the blocks, and their partitions nest."""
        q = int(self.labels.max()) + 1 if self.labels.size else 0
        seen = set()
        prev = None
        parts = []
        for f in self.forests:
            f = np.asarray(f, dtype=np.int64).reshape(-1, 2)
            part = VertexPartition(q)
            for a, b in f:
                key = (min(a, b), max(a, b))
                if key in seen:
                    return False
                seen.add(key)
                if not part.union(self.labels[a], self.labels[b]):
                    return False
            parts.append(part.roots())
        for i in range(1, len(parts)):
            # every block of forest i lies inside one block of forest i-1
            coarse, fine = parts[i - 1], parts[i]
            pairs = np.unique(np.stack([fine, coarse], axis=1), axis=0)
            if np.unique(pairs[:, 0]).size != pairs.shape[0]:
                return False
        return True

    def save(self, path):
        with open(path, "w") as fh:
            for i, f in enumerate(self.forests, start=1):
                fh.write(f"F {i}\n")
                for a, b in np.asarray(f, dtype=np.int64).reshape(-1, 2):
                    fh.write(f"{a} {b}\n")


def load_certificate(path, labels) -> CertificateForests:
    forests = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "F":
            forests.append([])
        else:
            forests[-1].append((int(parts[0]), int(parts[1])))
    return CertificateForests([np.asarray(f, dtype=np.int64).reshape(-1, 2) for f in forests],
                              np.asarray(labels))


def min_degree(G: SimpleGraph) -> int:
    if G.n < 1:
        raise InvalidInput("empty graph")
    return int(G.degrees.min())


def contracted_weights(G: SimpleGraph, labels, q: int | None = None):
    """Edge list (a, b, multiplicity) of the contraction given by block labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if q is None:
        q = int(labels.max()) + 1
    if q <= 4096 and G.indices.size > q * q:
        # dense graph, few blocks: accumulate straight from CSR without an edge list
        W = _kernels.dense_block_weights(G.indptr, G.indices, labels, q)
        a, b = np.nonzero(W)
        return a.astype(np.int64), b.astype(np.int64), W[a, b]
    e = G.edges()
    a, b = labels[e[:, 0]], labels[e[:, 1]]
    keep = a != b
    lo, hi = np.minimum(a[keep], b[keep]), np.maximum(a[keep], b[keep])
    key, w = np.unique(lo * q + hi, return_counts=True)
    return key // q, key % q, w


def exact_min_cut(G: SimpleGraph) -> CutWitness:
    """Global minimum cut by Stoer-Wagner (exhaustive enumeration below 17 vertices)."""
    if G.n < 2:
        raise InvalidInput("need at least two vertices")
    if G.n <= 16:
        return exhaustive_min_cut(G)
    return stoer_wagner(G)


def stoer_wagner(G: SimpleGraph) -> CutWitness:
    W = np.zeros((G.n, G.n), dtype=np.int64)
    e = G.edges()
    W[e[:, 0], e[:, 1]] = 1
    W[e[:, 1], e[:, 0]] = 1
    value, side = _kernels.stoer_wagner_dense(W)
    return CutWitness(int(value), side)


def exhaustive_min_cut(G: SimpleGraph) -> CutWitness:
    n = G.n
    if n > 20:
        raise InvalidInput("exhaustive enumeration limited to n <= 20")
    e = G.edges()
    masks = np.arange(1, 1 << (n - 1), dtype=np.int64)
    values = np.zeros(masks.size, dtype=np.int64)
    for a, b in e:
        values += ((masks >> a) ^ (masks >> b)) & 1
    i = int(np.argmin(values))
    side = ((masks[i] >> np.arange(n)) & 1).astype(bool)
    return CutWitness(int(values[i]), side)


def weighted_min_cut(q: int, a, b, w):
    """Exact min cut of a weighted multigraph on q nodes: (value, side mask over nodes)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64)
    if q < 2:
        raise InvalidInput("need at least two nodes")
    value, side = _kernels.ma_min_cut(q, a, b, w)
    return int(value), side


def contracted_min_cut(G: SimpleGraph, labels) -> CutWitness:
    """Min cut of the contraction of G, returned as a side over the base vertices."""
    labels = np.asarray(labels, dtype=np.int64)
    q = int(labels.max()) + 1
    a, b, w = contracted_weights(G, labels, q)
    value, side = weighted_min_cut(q, a, b, w)
    return CutWitness(value, side[labels])


def contract(G: SimpleGraph, F) -> VertexPartition:
    F = np.asarray(F, dtype=np.int64).reshape(-1, 2)
    part = VertexPartition(G.n)
    for a, b in F:
        if not (0 <= a < G.n and 0 <= b < G.n) or not G.has_edge(a, b):
            raise InvalidInput(f"edge ({a}, {b}) is not in the graph")
        part.union(a, b)
    return part


def ni_certificate_explicit(G: SimpleGraph, r: int, partition: VertexPartition | None = None,
                            order=None) -> CertificateForests:
    """r edge-disjoint forests by least-index placement over an explicit graph.

    With a partition the forests live on the contraction: edges inside a block
    are ignored and acyclicity is over blocks. `order` permutes the edge scan.
    """
    if r < 1:
        raise InvalidInput("r must be positive")
    labels = partition.labels() if partition is not None else np.arange(G.n)
    q = int(labels.max()) + 1 if G.n else 0
    e = G.edges()
    if order is not None:
        e = e[np.asarray(order)]
    a, b = labels[e[:, 0]], labels[e[:, 1]]
    slot = _kernels.least_index_forests(q, a, b, int(r))
    forests = [e[slot == i] for i in range(r)]
    return CertificateForests(forests, labels)


def degree_to_connectivity_gadget(G: SimpleGraph) -> SimpleGraph:
    """G plus a clique K on n new vertices, joined to every original vertex."""
    n = G.n
    if n < 2:
        raise InvalidInput("need at least two vertices")
    V = np.arange(n)
    K = np.arange(n, 2 * n)
    cross = np.stack(np.meshgrid(V, K, indexing="ij"), axis=-1).reshape(-1, 2)
    iu, ju = np.triu_indices(n, k=1)
    clique = np.stack([K[iu], K[ju]], axis=1)
    return SimpleGraph.from_edges(2 * n, np.concatenate([G.edges(), cross, clique]))


def load_graph(path) -> SimpleGraph:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    n, m = int(head[0]), int(head[1])
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(body) != m:
        raise InvalidInput(f"expected {m} edges, found {len(body)}")
    edges = np.asarray(body, dtype=np.int64).reshape(-1, 2)
    key = np.minimum(edges[:, 0], edges[:, 1]) * max(n, 1) + np.maximum(edges[:, 0], edges[:, 1])
    if np.unique(key).size != m:
        raise InvalidInput("duplicate edges")
    return SimpleGraph.from_edges(n, edges)


def save_graph(G: SimpleGraph, path):
    e = G.edges()
    with open(path, "w") as fh:
        fh.write(f"{G.n} {G.m}\n")
        for a, b in e:
            fh.write(f"{a} {b}\n")
