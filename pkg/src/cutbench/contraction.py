"""Star contraction, 1-out / 2-out sampling and goodness for contracting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .cut_oracle import CutOracle, MdcpOracle
from .errors import FAIL, InvalidInput
from .graph_core import SimpleGraph, VertexPartition
from .sparse_recovery import DirectedSubgraph, wc_recover_k_from_all

__all__ = [
    "DirectedSubgraph", "GoodnessReport", "StarSample", "sample_centers",
    "uniform_star_contraction", "explicit_star_contraction", "one_out_sample", "two_out_sample",
    "goodness_report", "miss_probability_bound", "learn_subgraph", "contract_edges",
]


def _norm_edges(a, b) -> np.ndarray:
    e = np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1).astype(np.int64)
    return np.unique(e, axis=0) if e.size else e.reshape(0, 2)


def contract_edges(n: int, edges) -> VertexPartition:
    part = VertexPartition(n)
    part.union_edges(edges)
    return part


@dataclass
class StarSample:
    centers: np.ndarray
    star_edges: np.ndarray
    left_out: np.ndarray

    def block_bound(self) -> int:
        return int(self.centers.size + self.left_out.size)


def sample_centers(n: int, p: float, rng) -> np.ndarray:
    """Each vertex independently with probability p; sorted ids."""
    if not 0 < p <= 1:
        raise InvalidInput(f"sampling probability {p} outside (0, 1]")
    if p == 1:
        return np.arange(n, dtype=np.int64)
    return np.flatnonzero(rng.random(n) < p).astype(np.int64)


def uniform_star_contraction(oracle, p: float, rng, centers=None):
    """Every non-center with a center neighbour contracts one uniformly chosen edge into R.

    With a CutOracle the neighbour is found by random_neighbor (cross probes);
    with an MdcpOracle the neighbourhoods of the centers are read with nbh.
    Returns (partition, StarSample).
    """
    n = oracle.n
    R = sample_centers(n, p, rng) if centers is None else np.unique(np.asarray(centers, dtype=np.int64))
    inR = np.zeros(n, dtype=bool)
    inR[R] = True
    outside = np.flatnonzero(~inR)
    if isinstance(oracle, MdcpOracle):
        pick = _pick_from_center_lists(n, R, [oracle.nbh(c) for c in R], inR, outside, rng)
    else:
        pick = oracle.random_neighbors(outside, R, rng) if outside.size else np.zeros(0, dtype=np.int64)
    hit = pick >= 0
    X = np.stack([outside[hit], pick[hit]], axis=1)
    sample = StarSample(R, X, outside[~hit])
    return contract_edges(n, X), sample


def explicit_star_contraction(G: SimpleGraph, p: float, rng, centers=None):
    """Uniform star contraction on an explicitly stored graph (no queries)."""
    n = G.n
    R = sample_centers(n, p, rng) if centers is None else np.unique(np.asarray(centers, dtype=np.int64))
    inR = np.zeros(n, dtype=bool)
    inR[R] = True
    outside = np.flatnonzero(~inR)
    pick = _pick_from_center_lists(n, R, [G.neighbors(c) for c in R], inR, outside, rng)
    hit = pick >= 0
    X = np.stack([outside[hit], pick[hit]], axis=1)
    return contract_edges(n, X), StarSample(R, X, outside[~hit])


def _pick_from_center_lists(n, R, lists, inR, outside, rng) -> np.ndarray:
    # uniform center per outside vertex: random keys, first key per vertex wins
    pick = np.full(n, -1, dtype=np.int64)
    if R.size:
        v = np.concatenate(lists).astype(np.int64)
        c = np.repeat(R, [len(l) for l in lists])
        keep = ~inR[v]
        v, c = v[keep], c[keep]
        order = np.lexsort((rng.random(v.size), v))
        v, c = v[order], c[order]
        first = np.ones(v.size, dtype=bool)
        first[1:] = v[1:] != v[:-1]
        pick[v[first]] = c[first]
    return pick[outside]


def _pick_arcs(H: DirectedSubgraph, rng, draws: int) -> np.ndarray:
    if H.arcs == 0:
        return np.zeros((0, 2), dtype=np.int64)
    order = np.argsort(H.src, kind="stable")
    src, dst = H.src[order], H.dst[order]
    heads, start, deg = np.unique(src, return_index=True, return_counts=True)
    picks = []
    for _ in range(draws):
        idx = start + np.floor(rng.random(heads.size) * deg).astype(np.int64)
        picks.append((heads, dst[idx]))
    a = np.concatenate([p[0] for p in picks])
    b = np.concatenate([p[1] for p in picks])
    return _norm_edges(a, b)


def one_out_sample(H: DirectedSubgraph, rng) -> np.ndarray:
    """One uniform out-arc per vertex with out-degree > 0, as undirected edges."""
    return _pick_arcs(H, rng, 1)


def two_out_sample(H: DirectedSubgraph, rng) -> np.ndarray:
    """Two independent uniform out-arcs per vertex (with replacement), as undirected edges."""
    return _pick_arcs(H, rng, 2)


@dataclass
class GoodnessReport:
    """q_u = out-arcs of u crossing C / out-degree of u (0 without out-arcs)."""
    crossing: np.ndarray
    out_degree: np.ndarray

    @property
    def q(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.out_degree > 0, self.crossing / np.maximum(self.out_degree, 1), 0.0)

    @property
    def max_q(self) -> float:
        q = self.q
        return float(q.max()) if q.size else 0.0

    @property
    def sum_q(self) -> float:
        return float(self.q.sum())

    def is_good(self, alpha: float, beta: float) -> bool:
        return self.max_q <= alpha and self.sum_q <= beta

    def avoid_probability(self) -> float:
        """Exact probability that a 1-out sample of H picks no C edge."""
        return float(np.prod(1.0 - self.q))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "q_u"])
            for v, qv in enumerate(self.q):
                w.writerow([v, repr(float(qv))])


def goodness_report(G: SimpleGraph, H: DirectedSubgraph, C) -> GoodnessReport:
    C = np.asarray(C, dtype=np.int64).reshape(-1, 2)
    if C.size and not G.has_edges(C).all():
        raise InvalidInput("C must be a set of edges of G")
    keys = set(zip(np.minimum(C[:, 0], C[:, 1]).tolist(), np.maximum(C[:, 0], C[:, 1]).tolist()))
    lo, hi = np.minimum(H.src, H.dst), np.maximum(H.src, H.dst)
    on_c = np.fromiter(((a, b) in keys for a, b in zip(lo.tolist(), hi.tolist())), bool, H.arcs)
    crossing = np.bincount(H.src[on_c], minlength=H.n)
    return GoodnessReport(crossing, H.out_degree())


def miss_probability_bound(alpha: float, beta: float) -> float:
    """(1 - alpha)^ceil(beta / alpha): a 1-out sample of an (alpha, beta)-good
    graph avoids the protected cut with at least this probability."""
    if not 0 <= alpha < 1:
        raise InvalidInput("alpha must lie in [0, 1)")
    if alpha == 0:
        return 1.0
    return (1.0 - alpha) ** max(1, math.ceil(beta / alpha))


def learn_subgraph(oracle: CutOracle, W, h: int, rng, tau: float = 0.0, clock_factor: float = 100.0,
                   bipartition=None, info: dict | None = None):
    """Directed subgraph of G[W] where all but tau + |W|/h vertices get out-degree >= h.

    W is split by fair coins (or by the boolean mask `bipartition` over W);
    each side keeps the vertices with at least h neighbours across, and
    WC-recover learns h of those neighbours. Returns FAIL when too many
    vertices miss the degree filter or a recovery call runs out of time.
    """
    W = np.unique(np.asarray(W, dtype=np.int64))
    view = oracle.view(restrict=W) if W.size < oracle.n else oracle
    side = rng.random(W.size) < 0.5 if bipartition is None else np.asarray(bipartition, dtype=bool)
    V1, V2 = W[side], W[~side]
    d1 = view.cross_each(V1, V2) if V1.size and V2.size else np.zeros(V1.size, dtype=np.int64)
    d2 = view.cross_each(V2, V1) if V1.size and V2.size else np.zeros(V2.size, dtype=np.int64)
    keep1, keep2 = d1 >= h, d2 >= h
    missing = W.size - int(keep1.sum()) - int(keep2.sum())
    if info is not None:
        info["missing"] = missing
    if missing > tau + W.size / h:
        return FAIL
    Z1 = wc_recover_k_from_all(view, V1[keep1], V2, h, rng, clock_factor=clock_factor,
                               min_degree=h, degrees=d1[keep1])
    if Z1 is FAIL:
        return FAIL
    Z2 = wc_recover_k_from_all(view, V2[keep2], V1, h, rng, clock_factor=clock_factor,
                               min_degree=h, degrees=d2[keep2])
    if Z2 is FAIL:
        return FAIL
    return Z1.union(Z2)
