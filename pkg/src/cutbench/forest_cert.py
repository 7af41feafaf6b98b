"""Spanning forests and sparse r-edge-connectivity certificates from cut queries.

Two spanning forest routines: a Prim-style one with two nested binary searches
per edge (O(q log n) queries on a q-block contraction) and a Boruvka-style one
that learns outgoing edges of many components at once through the sparse
recovery machinery. The certificate builder runs r Boruvka forests in
parallel and inserts each found edge into the first forest it keeps acyclic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cut_oracle import CutOracle
from .errors import FAIL, ClockExpired
from .graph_core import CertificateForests, VertexPartition
from .sparse_recovery import recover_k_from_all

BORUVKA_K = 10
# expected cut units of contracted_certificate are at most
# CERT_EXPECTED * (n + r q log2 n / log2 q); measured, see tests
CERT_EXPECTED = 12.0


def _as_labels(partition, n: int) -> np.ndarray:
    if partition is None:
        return np.arange(n, dtype=np.int64)
    if isinstance(partition, VertexPartition):
        return partition.labels()
    labels = np.asarray(partition, dtype=np.int64)
    # renumber by smallest member so block order is canonical
    return VertexPartition.from_labels(labels).labels()


def _log2n(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2))))


# ---------------------------------------------------------------------------
# Prim style

def simple_spanning_forest_reference(oracle: CutOracle, partition=None, removed=None) -> np.ndarray:
    """Plain-Python Prim growth issuing every cross query one by one.

    Kept as the readable definition; `simple_spanning_forest` evaluates the
    same probe sequence in compiled code and must match it edge for edge and
    charge for charge.
    """
    n = oracle.n
    labels = _as_labels(partition, n)
    q = int(labels.max()) + 1 if n else 0
    view = oracle.view(removed=removed) if removed is not None and len(removed) else oracle
    members = [np.flatnonzero(labels == b) for b in range(q)]
    done = np.zeros(q, dtype=bool)
    out = []
    for b0 in range(q):
        if done[b0]:
            continue
        inA = np.zeros(n, dtype=bool)
        cur = b0
        while True:
            done[cur] = True
            inA[members[cur]] = True
            if view.cross(inA, ~inA) == 0:
                break
            alist = np.flatnonzero(inA)
            lo, hi = 0, alist.size
            while hi - lo > 1:
                h = (hi - lo + 1) // 2
                if view.cross(alist[lo:lo + h], ~inA) > 0:
                    hi = lo + h
                else:
                    lo += h
            u = int(alist[lo])
            blist = np.flatnonzero(~inA)
            lo, hi = 0, blist.size
            while hi - lo > 1:
                h = (hi - lo + 1) // 2
                if view.cross([u], blist[lo:lo + h]) > 0:
                    hi = lo + h
                else:
                    lo += h
            v = int(blist[lo])
            out.append((u, v))
            cur = int(labels[v])
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def simple_spanning_forest(oracle: CutOracle, partition=None, removed=None) -> np.ndarray:
    """Spanning forest of the contraction given by `partition`, as base edges."""
    labels = _as_labels(partition, oracle.n)
    if oracle.n == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return oracle.prim_forests(labels, 1, removed=removed)[0]


# ---------------------------------------------------------------------------
# Boruvka style

@dataclass
class ActiveState:
    """Active flags per vertex plus the current component labelling."""
    active: np.ndarray
    labels: np.ndarray
    history: list = field(default_factory=list)

    def active_blocks(self) -> np.ndarray:
        return np.unique(self.labels[self.active])

    def groups(self) -> tuple[np.ndarray, list[np.ndarray]]:
        """Active blocks in label order with their active vertices ascending."""
        idx = np.flatnonzero(self.active)
        order = np.lexsort((idx, self.labels[idx]))
        idx = idx[order]
        blocks, starts = np.unique(self.labels[idx], return_index=True)
        return blocks, np.split(idx, starts[1:])

    def deactivate(self, mask):
        # a vertex never comes back once inactive
        self.active &= ~mask


def _learn_red_blue_edges(view: CutOracle, labels, reps, rep_labels, rng, k: int):
    """One coin per represented block; every red representative with a blue
    neighbour learns at least one blue neighbour. Returns all learned
    red -> blue edges (callers drop those closing cycles), first the one
    edge per representative, then the extras."""
    if reps.size < 2:
        return np.zeros((0, 2), dtype=np.int64)
    red_block = rng.random(reps.size) < 0.5
    red = reps[red_block]
    blue_blocks = rep_labels[~red_block]
    if red.size == 0 or blue_blocks.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    blue = np.flatnonzero(np.isin(labels, blue_blocks))
    counts = view.cross_each(red, blue)
    W = red[counts > 0]
    if W.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    got = recover_k_from_all(view.bipartite_block(W, blue), k, rng, degrees=counts[counts > 0])
    first = [(w, blue[l[0]]) for w, l in zip(W, got.lists)]
    extra = [(w, blue[c]) for w, l in zip(W, got.lists) for c in l[1:]]
    return np.array(first + extra, dtype=np.int64).reshape(-1, 2)


def boruvka_spanning_forest(oracle: CutOracle, rng, k: int = BORUVKA_K,
                            switch_below: float | None = None, info: dict | None = None) -> np.ndarray:
    """Zero-error spanning forest of the hidden graph, O(n) cut queries in expectation.

    Rounds: scan active vertices of each active component for one with an
    edge leaving it (vertices answering zero go inactive), then split the
    represented components red/blue and learn a blue neighbour for each red
    representative. Once fewer than `switch_below` (default n / ceil(log2 n))
    components are active the Prim routine finishes the job.
    """
    n = oracle.n
    if switch_below is None:
        switch_below = n / _log2n(n)
    part = VertexPartition(n)
    state = ActiveState(np.ones(n, dtype=bool), np.arange(n, dtype=np.int64))
    forest = []
    rounds = 0
    while True:
        blocks, groups = state.groups()
        state.history.append(blocks.size)
        if blocks.size == 0:
            break
        if blocks.size < switch_below:
            forest.append(simple_spanning_forest(oracle, state.labels))
            break
        rounds += 1
        reps, zero = oracle.scan_for_leaving_edge(groups, state.labels)
        state.deactivate(zero)
        found = reps >= 0
        edges = _learn_red_blue_edges(oracle, state.labels, reps[found], blocks[found], rng, k)
        keep = [part.union(a, b) for a, b in edges]
        forest.append(edges[np.asarray(keep, dtype=bool)] if len(edges) else edges)
        state.labels = part.labels()
    if info is not None:
        info["rounds"] = rounds
        info["active_history"] = state.history
    if not forest:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate([np.asarray(f, dtype=np.int64).reshape(-1, 2) for f in forest])


# ---------------------------------------------------------------------------
# certificates

def contracted_certificate(oracle: CutOracle, partition, r: int, rng, eps: float = 0.5,
                           switch_factor: float = 1.0, info: dict | None = None,
                           k: int = BORUVKA_K) -> CertificateForests:
    """Sparse r-edge-connectivity certificate of a contraction (zero error).

    With q blocks and q >= log2(n)^(2+eps) the r forests are grown in parallel
    Boruvka rounds on the graph minus already chosen edges; each learned edge
    goes to the least-index forest where it closes no cycle. Once the number
    of active components of the last forest has dropped to
    switch_factor * q / ceil(log2 n), each forest is finished by one Prim pass.
    Below the size threshold r sequential Prim passes are used instead.
    """
    n = oracle.n
    labels = _as_labels(partition, n)
    q = int(labels.max()) + 1 if n else 0
    if info is None:
        info = {}
    if r < 1 or q < 2:
        info["path"] = "trivial"
        return CertificateForests([np.zeros((0, 2), dtype=np.int64) for _ in range(max(r, 0))], labels)
    if q < _log2n(n) ** (2 + eps):
        info["path"] = "sequential"
        return CertificateForests(oracle.prim_forests(labels, r), labels)
    info["path"] = "parallel"
    par = np.tile(np.arange(q, dtype=np.int64), (r, 1))
    chosen = np.zeros((0, 2), dtype=np.int64)
    slots = np.zeros(0, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    target = switch_factor * q / _log2n(n)
    history = []
    rounds = 0
    while True:
        comp = _uf_components(par[-1])[labels]
        idx = np.flatnonzero(active)
        blocks = np.unique(comp[idx])
        history.append(blocks.size)
        if blocks.size <= target or blocks.size == 0:
            break
        rounds += 1
        view = oracle.view(removed=chosen)
        order = np.lexsort((idx, comp[idx]))
        idx = idx[order]
        bl, starts = np.unique(comp[idx], return_index=True)
        groups = np.split(idx, starts[1:])
        reps, zero = view.scan_for_leaving_edge(groups, comp)
        active &= ~zero
        found = reps >= 0
        edges = _learn_red_blue_edges(view, comp, reps[found], bl[found], rng, k)
        if len(edges):
            got = _kernels.least_index_insert(par, labels[edges[:, 0]], labels[edges[:, 1]])
            keep = got >= 0
            chosen = np.concatenate([chosen, edges[keep]])
            slots = np.concatenate([slots, got[keep]])
    # finish each forest with one Prim pass over its current contraction
    rows = [_uf_components(par[i])[labels] for i in range(r)]
    extras = oracle.prim_forest_sequence(rows, removed=chosen)
    for i, extra in enumerate(extras):
        if len(extra):
            # Prim edges join distinct components of forest i, so they land in slot i
            chosen = np.concatenate([chosen, extra])
            slots = np.concatenate([slots, np.full(len(extra), i, dtype=np.int64)])
    info["rounds"] = rounds
    info["active_history"] = history
    return CertificateForests([chosen[slots == i] for i in range(r)], labels)


def _uf_components(parent_row) -> np.ndarray:
    # component id per node of one union-find row (root ids, not compacted)
    p = parent_row.copy()
    while True:
        pp = p[p]
        if np.array_equal(pp, p):
            return p
        p = pp


def expected_certificate_units(n: int, q: int, r: int) -> float:
    if q < 2:
        return float(CERT_EXPECTED * max(n, 1))
    return CERT_EXPECTED * (n + r * q * math.log2(max(n, 2)) / math.log2(q))


def certificate_mc(oracle: CutOracle, partition, r: int, rng, clock_factor: float = 100.0,
                   **kwargs):
    """contracted_certificate under a clock of clock_factor times its expected cost.

    Returns FAIL when the clock runs out; otherwise exactly what the zero-error
    routine returns for the same random stream.
    """
    labels = _as_labels(partition, oracle.n)
    q = int(labels.max()) + 1 if oracle.n else 0
    limit = clock_factor * expected_certificate_units(oracle.n, q, r)
    try:
        with oracle.ledger.clock(limit) as clk:
            return contracted_certificate(oracle, labels, r, rng, **kwargs)
    except ClockExpired as exc:
        if exc.clock is not clk:
            raise
        return FAIL


def certificate_min_cut(cert: CertificateForests) -> tuple[float, np.ndarray]:
    """Exact min cut of the certificate multigraph over the blocks."""
    from .graph_core import weighted_min_cut
    labels = cert.labels
    q = int(labels.max()) + 1 if labels.size else 0
    if q < 2:
        return math.inf, np.zeros(labels.size, dtype=bool)
    e = cert.edges()
    a, b = labels[e[:, 0]], labels[e[:, 1]]
    keep = a != b
    value, side = weighted_min_cut(q, a[keep], b[keep], np.ones(int(keep.sum()), dtype=np.int64))
    return value, side[labels]
