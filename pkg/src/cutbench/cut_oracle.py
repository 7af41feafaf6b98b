"""Instrumented query access to a hidden graph.

Algorithms only talk to a graph through the oracles in this module. Every
answer is charged to a QueryLedger. Some methods evaluate a whole batch of
queries at once (for speed); they charge exactly what issuing those queries
one at a time would cost.
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ClockExpired, InvalidInput
from .graph_core import SimpleGraph, as_mask, contracted_weights, weighted_min_cut

CUT_CATEGORIES = ("cut", "cross", "bip_product", "induced_cut")
MDCP_CATEGORIES = ("mdcp_mindeg", "mdcp_nbh", "mdcp_spf", "mdcp_cut")
CATEGORIES = CUT_CATEGORIES + ("mv",) + MDCP_CATEGORIES + ("modeled",)

# units charged per call for the derived primitives
DERIVED_COST = 3


class Clock:
    def __init__(self, ledger, budget):
        self.ledger = ledger
        self.budget = budget
        self.start = ledger.query_units

    def used(self):
        return self.ledger.query_units - self.start


class QueryLedger:
    """Per-category call counts and charged units."""

    def __init__(self):
        self.calls = dict.fromkeys(CATEGORIES, 0)
        self.units = dict.fromkeys(CATEGORIES, 0)
        self._clocks: list[Clock] = []

    def charge(self, category: str, calls: int = 1, units_per_call: int = 1):
        if calls < 0 or units_per_call < 0:
            raise ValueError("charges are non-negative")
        if calls == 0:
            return
        self.calls[category] += int(calls)
        self.units[category] += int(calls) * int(units_per_call)
        for clk in self._clocks:
            if clk.used() > clk.budget:
                raise ClockExpired(clk)

    def charge_modeled(self, units: int):
        self.calls["modeled"] += 1
        self.units["modeled"] += int(units)

    @property
    def cut_units(self) -> int:
        return sum(self.units[c] for c in CUT_CATEGORIES)

    @property
    def mdcp_units(self) -> int:
        return sum(self.units[c] for c in MDCP_CATEGORIES)

    @property
    def modeled_units(self) -> int:
        return self.units["modeled"]

    @property
    def query_units(self) -> int:
        return self.total - self.units["modeled"]

    @property
    def total(self) -> int:
        return sum(self.units.values())

    @contextmanager
    def clock(self, budget):
        clk = Clock(self, budget)
        self._clocks.append(clk)
        try:
            yield clk
        finally:
            self._clocks.remove(clk)

    def snapshot(self) -> dict:
        return {c: (self.calls[c], self.units[c]) for c in CATEGORIES}

    def rows(self):
        return [(c, self.calls[c], self.units[c]) for c in CATEGORIES]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["category", "calls", "charged_units"])
            w.writerows(self.rows())


def _gather(indptr, indices, idx):
    """Concatenated neighbour lists of the vertices in idx, plus their owners."""
    starts = indptr[idx]
    lens = indptr[idx + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    offs = np.cumsum(lens) - lens
    pos = np.arange(total) - np.repeat(offs, lens) + np.repeat(starts, lens)
    return indices[pos], np.repeat(idx, lens)


class CutOracle:
    """Cut queries on a hidden simple graph, optionally viewed with edges X removed
    and restricted to a vertex set V'."""

    def __init__(self, graph: SimpleGraph, ledger: QueryLedger | None = None,
                 identity_mode: bool = False):
        self._g = graph
        self.n = graph.n
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.identity_mode = identity_mode
        self._removed = None
        self._restrict = None
        self._cache = OrderedDict()
        self._nnz = max(int(graph.indices.size), 1)

    # -- views ---------------------------------------------------------
    def view(self, removed=None, restrict=None) -> "CutOracle":
        """Same hidden graph and ledger, answers refer to (V', E|V' minus X)."""
        out = CutOracle.__new__(CutOracle)
        out.__dict__.update(self.__dict__)
        out._removed = None
        if removed is not None:
            rem = np.asarray(removed, dtype=np.int64).reshape(-1, 2)
            if rem.size:
                if not self._g.has_edges(rem).all():
                    raise InvalidInput("removed set contains a non-edge")
                out._removed = (np.minimum(rem[:, 0], rem[:, 1]), np.maximum(rem[:, 0], rem[:, 1]))
        out._restrict = None if restrict is None else as_mask(restrict, self.n).copy()
        return out

    @property
    def is_view(self) -> bool:
        return self._removed is not None or self._restrict is not None

    # -- evaluation helpers (no charging) -------------------------------
    def _mask(self, S):
        m = as_mask(S, self.n)
        if self._restrict is not None and np.any(m & ~self._restrict):
            raise InvalidInput("query set leaves the restricted vertex set")
        return m

    def _product(self, mask):
        key = hash(mask.tobytes())
        hit = self._cache.get(key)
        if hit is not None and np.array_equal(hit[0], mask):
            self._cache.move_to_end(key)
            return hit[1]
        vec = self._g.matrix() @ mask.astype(np.int64)
        self._cache[key] = (mask.copy(), vec)
        if len(self._cache) > 16:
            self._cache.popitem(last=False)
        return vec

    def _between(self, S, T):
        """|E(S, T)| in the full hidden graph, S and T disjoint masks."""
        deg = self._g.degrees
        si = np.flatnonzero(S)
        ti = np.flatnonzero(T)
        vs, vt = int(deg[si].sum()), int(deg[ti].sum())
        small, other, big_mask = (si, T, T) if vs <= vt else (ti, S, S)
        if 4 * min(vs, vt) <= self._nnz:
            nb, _ = _gather(self._g.indptr, self._g.indices, small)
            return int(np.count_nonzero(other[nb]))
        return int(self._product(big_mask)[small].sum())

    def _removed_between(self, S, T):
        if self._removed is None:
            return 0
        a, b = self._removed
        return int(np.count_nonzero((S[a] & T[b]) | (S[b] & T[a])))

    def _count(self, S, T):
        return self._between(S, T) - self._removed_between(S, T)

    def _universe(self):
        return self._restrict if self._restrict is not None else np.ones(self.n, dtype=bool)

    def _cut_value(self, S):
        return self._count(S, self._universe() & ~S)

    # -- single queries --------------------------------------------------
    def cut(self, S) -> int:
        S = self._mask(S)
        if self.is_view:
            self.ledger.charge("induced_cut", 1, DERIVED_COST)
        else:
            self.ledger.charge("cut", 1, 1)
        return self._cut_value(S)

    def cross(self, S, T) -> int:
        S, T = self._mask(S), self._mask(T)
        if np.any(S & T):
            raise InvalidInput("cross needs disjoint sets")
        self.ledger.charge("cross", 1, DERIVED_COST)
        if self.identity_mode:
            twice = self._cut_value(S) + self._cut_value(T) - self._cut_value(S | T)
            return twice // 2
        return self._count(S, T)

    def bip_product(self, S, T, x, y) -> int:
        S = np.asarray(S, dtype=np.int64)
        T = np.asarray(T, dtype=np.int64)
        x = np.asarray(x, dtype=bool)
        y = np.asarray(y, dtype=bool)
        if x.shape != S.shape or y.shape != T.shape:
            raise InvalidInput("bit-vectors must match their index sets")
        if np.intersect1d(S, T).size:
            raise InvalidInput("bip_product needs disjoint sides")
        self.ledger.charge("bip_product", 1, DERIVED_COST)
        return self._count(as_mask(S[x], self.n), as_mask(T[y], self.n))

    def induced_cut(self, Vp, X, S) -> int:
        Vp = as_mask(Vp, self.n)
        S = as_mask(S, self.n)
        if np.any(S & ~Vp):
            raise InvalidInput("S must lie inside V'")
        X = np.asarray(X, dtype=np.int64).reshape(-1, 2)
        self.ledger.charge("induced_cut", 1, DERIVED_COST)
        rest = Vp & ~S
        value = self._count(S, rest)
        if X.size:
            value -= int(np.count_nonzero((S[X[:, 0]] & rest[X[:, 1]]) | (S[X[:, 1]] & rest[X[:, 0]])))
        return value

    def mv_query(self, x, complement_only: bool = False) -> np.ndarray:
        """A x (one matrix-vector query); optionally A x restricted to zero entries of x."""
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.n,):
            raise InvalidInput("x must have length n")
        self.ledger.charge("mv", 1, 1)
        y = self._g.matrix() @ x
        if self._removed is not None:
            a, b = self._removed
            np.subtract.at(y, a, x[b])
            np.subtract.at(y, b, x[a])
        if complement_only:
            y = y * (1 - x)
        return y

    # -- batched queries ---------------------------------------------------
    def _per_vertex_into(self, idx, T):
        """For each v in idx: number of (non-removed) edges from v into mask T."""
        nb, own = _gather(self._g.indptr, self._g.indices, idx)
        pos = np.searchsorted(idx, own) if idx.size and np.all(np.diff(idx) > 0) else None
        if pos is None:
            order = np.argsort(idx, kind="stable")
            pos = order[np.searchsorted(idx[order], own)]
        counts = np.bincount(pos[T[nb]], minlength=idx.size)
        if self._removed is not None:
            a, b = self._removed
            where = np.full(self.n, -1, dtype=np.int64)
            where[idx] = np.arange(idx.size)
            for x, y in ((a, b), (b, a)):
                hit = T[y] & (where[x] >= 0)
                np.subtract.at(counts, where[x[hit]], 1)
        return counts

    def cross_each(self, vertices, T, exclude_self: bool = False) -> np.ndarray:
        """|E({v}, T)| for every v in `vertices`; one cross query each.

        With exclude_self a vertex may lie in T and the query is |E({v}, T - v)|.
        """
        idx = np.asarray(vertices, dtype=np.int64)
        T = self._mask(T)
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        if not exclude_self and np.any(T[idx]):
            raise InvalidInput("vertices must lie outside T")
        self.ledger.charge("cross", idx.size, DERIVED_COST)
        return self._per_vertex_into(idx, T)

    def degrees_by_cut(self, vertices=None) -> np.ndarray:
        """cut({v}) for each v (a minimum-degree pass)."""
        idx = np.arange(self.n) if vertices is None else np.asarray(vertices, dtype=np.int64)
        if self.is_view:
            self.ledger.charge("induced_cut", idx.size, DERIVED_COST)
            return self._per_vertex_into(idx, self._universe())
        self.ledger.charge("cut", idx.size, 1)
        return self._g.degrees[idx].copy()

    def scan_for_leaving_edge(self, groups: list, labels) -> tuple[np.ndarray, np.ndarray]:
        """For each group of candidate vertices (probed in the given order), find the first
        vertex with an edge leaving its block under `labels`.

        Each probe is cross({v}, V' minus block(v)). Returns (representative per group or -1,
        mask of vertices whose probe returned zero).
        """
        labels = np.asarray(labels, dtype=np.int64)
        lens = np.fromiter((len(g) for g in groups), np.int64, len(groups))
        reps = np.full(len(groups), -1, dtype=np.int64)
        zero = np.zeros(self.n, dtype=bool)
        if lens.sum() == 0:
            return reps, zero
        cand = np.concatenate([np.asarray(g, dtype=np.int64) for g in groups])
        nb, own = _gather(self._g.indptr, self._g.indices, np.arange(self.n))
        uni = self._universe()
        leaving = (labels[nb] != labels[own]) & uni[nb]
        out = np.bincount(own[leaving], minlength=self.n)
        if self._removed is not None:
            a, b = self._removed
            diff = labels[a] != labels[b]
            np.subtract.at(out, a[diff], 1)
            np.subtract.at(out, b[diff], 1)
        vals = out[cand]
        probes = 0
        start = 0
        for gi, ln in enumerate(lens):
            seg = vals[start:start + ln]
            hit = np.flatnonzero(seg > 0)
            if hit.size:
                k = int(hit[0])
                reps[gi] = cand[start + k]
                zero[cand[start:start + k]] = True
                probes += k + 1
            else:
                zero[cand[start:start + ln]] = True
                probes += int(ln)
            start += ln
        self.ledger.charge("cross", probes, DERIVED_COST)
        return reps, zero

    def random_neighbor(self, v: int, R, rng) -> int | None:
        """Uniform neighbour of v inside R by proportional halving (R split by id)."""
        R = np.unique(np.asarray(list(R) if isinstance(R, (set, frozenset)) else R, dtype=np.int64))
        if np.any(R == v):
            raise InvalidInput("v must not be in R")
        if R.size == 0:
            self.ledger.charge("cross", 1, DERIVED_COST)
            return None
        got = int(self.random_neighbors(np.array([v]), R, rng)[0])
        return None if got < 0 else got

    def random_neighbors(self, vertices, R, rng) -> np.ndarray:
        """Batched random_neighbor; -1 where v has no neighbour in R.

        Per vertex: one existence probe cross({v}, R), then per halving level one
        probe cross({v}, lower half); the upper-half count follows by subtraction.
        Uniforms are drawn vertex by vertex, `levels` per vertex.
        """
        vertices = np.asarray(vertices, dtype=np.int64)
        R = np.unique(np.asarray(R, dtype=np.int64))
        out = np.full(vertices.size, -1, dtype=np.int64)
        if vertices.size == 0:
            return out
        inR = self._mask(R)
        if np.any(inR[vertices]):
            raise InvalidInput("vertices must lie outside R")
        levels = max(1, math.ceil(math.log2(R.size))) if R.size > 1 else 1
        u = rng.random((vertices.size, levels))
        rank = np.full(self.n, -1, dtype=np.int64)
        rank[R] = np.arange(R.size)
        probes = 0
        for i, v in enumerate(vertices):
            nb = self._g.neighbors(v)
            pos = rank[nb]
            keep = pos >= 0
            if self._removed is not None:
                a, b = self._removed
                gone = np.concatenate([b[a == v], a[b == v]])
                keep &= ~np.isin(nb, gone)
            pos = np.sort(pos[keep])
            probes += 1
            if pos.size == 0:
                continue
            lo, hi, lev = 0, R.size, 0
            total = pos.size
            while hi - lo > 1:
                mid = lo + (hi - lo + 1) // 2
                left = int(np.searchsorted(pos, mid) - np.searchsorted(pos, lo))
                probes += 1
                if u[i, lev] * total < left:
                    hi, total = mid, left
                else:
                    lo, total = mid, total - left
                lev += 1
            out[i] = R[lo]
        self.ledger.charge("cross", probes, DERIVED_COST)
        return out

    def prim_forests(self, labels, r: int = 1, removed=None, use_table=None):
        """r successive two-binary-search Prim passes over the contraction `labels`.

        Batched evaluation of the probe sequence of forest_cert's reference
        implementation; one cross charge per probe. Returns a list of r edge
        arrays (later ones empty once a pass finds nothing).
        """
        if self._restrict is not None:
            raise InvalidInput("prim_forests does not support restricted views")
        labels = np.asarray(labels, dtype=np.int64)
        q = int(labels.max()) + 1
        g = self._g
        flags = np.zeros(g.indices.size, dtype=np.bool_)
        rem = []
        if self._removed is not None:
            rem.append(np.stack(self._removed, axis=1))
        if removed is not None and len(removed):
            rem.append(np.asarray(removed, dtype=np.int64).reshape(-1, 2))
        if rem:
            rr = np.concatenate(rem)
            _kernels.mark_removed(g.indptr, g.indices, flags, rr[:, 0].copy(), rr[:, 1].copy())
        if use_table is None:
            use_table = self.n * q <= min(2 * self._nnz, 1 << 25)
        fu, fv, fi, probes = _kernels.prim_passes(g.indptr, g.indices, labels, q, int(r), flags,
                                                  bool(use_table))
        self.ledger.charge("cross", int(probes), DERIVED_COST)
        e = np.stack([fu, fv], axis=1)
        return [e[fi == i] for i in range(r)]

    def prim_forest_sequence(self, label_rows, removed=None) -> list[np.ndarray]:
        """One Prim pass per labelling in `label_rows`, in order; the edges found
        by a pass are removed for all later passes. Same probes and charges as
        calling prim_forests(labels, 1, removed=...) pass by pass."""
        if self._restrict is not None:
            raise InvalidInput("prim_forests does not support restricted views")
        g = self._g
        flags = np.zeros(g.indices.size, dtype=np.bool_)
        rem = []
        if self._removed is not None:
            rem.append(np.stack(self._removed, axis=1))
        if removed is not None and len(removed):
            rem.append(np.asarray(removed, dtype=np.int64).reshape(-1, 2))
        if rem:
            rr = np.concatenate(rem)
            _kernels.mark_removed(g.indptr, g.indices, flags, rr[:, 0].copy(), rr[:, 1].copy())
        out = []
        for labels in label_rows:
            labels = np.asarray(labels, dtype=np.int64)
            q = int(labels.max()) + 1
            use_table = self.n * q <= min(2 * self._nnz, 1 << 25)
            fu, fv, _, probes = _kernels.prim_passes(g.indptr, g.indices, labels, q, 1, flags, use_table)
            self.ledger.charge("cross", int(probes), DERIVED_COST)
            _kernels.mark_removed(g.indptr, g.indices, flags, fu.copy(), fv.copy())
            out.append(np.stack([fu, fv], axis=1))
        return out

    def bipartite_block(self, S, T) -> "BipartiteBlock":
        return BipartiteBlock(self, S, T)

    def modeled_min_cut(self, labels):
        """Exact min cut of the contraction, charged as N log^8 N modeled cut units."""
        labels = np.asarray(labels, dtype=np.int64)
        q = int(labels.max()) + 1
        self.ledger.charge_modeled(modeled_mincut_cost(q))
        a, b, w = contracted_weights(self._g, labels, q)
        if self._removed is not None:
            raise InvalidInput("modeled solver runs on the base graph")
        if q < 2:
            return math.inf, np.zeros(self.n, dtype=bool)
        value, side = weighted_min_cut(q, a, b, w)
        return value, side[labels]


def modeled_mincut_cost(N: int) -> int:
    """Charge for the cut-query min-cut black box on N vertices: N * ceil(log2 N)^8."""
    if N < 2:
        return 1
    return int(N * math.ceil(math.log2(N)) ** 8)


class BipartiteBlock:
    """Additive queries x^T M y on the bipartite adjacency M = A(S, T), charged as
    bip_product calls. Queries whose x or y has empty support are answered 0 for
    free (no oracle contact is needed to know that)."""

    def __init__(self, oracle: CutOracle, S, T):
        S = np.asarray(S, dtype=np.int64)
        T = np.asarray(T, dtype=np.int64)
        if np.intersect1d(S, T).size:
            raise InvalidInput("sides must be disjoint")
        self.oracle = oracle
        self.S = S
        self.T = T
        self.shape = (S.size, T.size)
        A = oracle._g.matrix()
        M = A[S][:, T].tocsr()
        if oracle._removed is not None:
            a, b = oracle._removed
            ps = np.full(oracle.n, -1, dtype=np.int64)
            pt = np.full(oracle.n, -1, dtype=np.int64)
            ps[S] = np.arange(S.size)
            pt[T] = np.arange(T.size)
            rows, cols = [], []
            for x, y in ((a, b), (b, a)):
                hit = (ps[x] >= 0) & (pt[y] >= 0)
                rows.append(ps[x[hit]])
                cols.append(pt[y[hit]])
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            if rows.size:
                D = sp.csr_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=self.shape)
                M = (M - D).tocsr()
                M.eliminate_zeros()
        self._M = M.astype(np.int64)
        self._M.sort_indices()
        self.queries = 0

    def _csr(self):
        return self._M

    def _charge(self, k):
        self.queries += int(k)
        self.oracle.ledger.charge("bip_product", int(k), DERIVED_COST)

    def grid(self, X, Y) -> np.ndarray:
        """All answers x_a^T M y_b for rows x_a of X and rows y_b of Y."""
        X = sp.csr_matrix(X, dtype=np.int64)
        Y = sp.csr_matrix(Y, dtype=np.int64)
        nx = np.count_nonzero(np.diff(X.indptr))
        ny = np.count_nonzero(np.diff(Y.indptr))
        self._charge(nx * ny)
        return np.asarray((X @ self._M @ Y.T).todense())

    def pairs(self, X, Y) -> np.ndarray:
        """Answers x_a^T M y_a for matching rows of X and Y."""
        X = sp.csr_matrix(X, dtype=np.int64)
        Y = sp.csr_matrix(Y, dtype=np.int64)
        live = (np.diff(X.indptr) > 0) & (np.diff(Y.indptr) > 0)
        self._charge(np.count_nonzero(live))
        return _kernels.csr_pair_answers(self._M, X, Y)

    def truth(self) -> sp.csr_matrix:
        """Ground truth for test assertions only."""
        return self._M.copy()


@dataclass(frozen=True)
class MdcpCostTable:
    n: int

    @property
    def log(self) -> int:
        return max(1, math.ceil(math.log2(self.n))) if self.n > 1 else 1

    @property
    def mindeg(self) -> int:
        return max(1, math.ceil(math.sqrt(self.n)) * self.log)

    @property
    def nbh(self) -> int:
        return self.log

    @property
    def spf(self) -> int:
        return self.log ** 6

    @property
    def cut(self) -> int:
        return 1

    def as_dict(self):
        return {"mindeg": self.mindeg, "nbh": self.nbh, "spf": self.spf, "cut": self.cut}


class MdcpOracle:
    """Charged minimum-degree / neighbourhood / spanning-forest / cut primitives."""

    def __init__(self, graph: SimpleGraph, ledger: QueryLedger | None = None):
        self._g = graph
        self.n = graph.n
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.costs = MdcpCostTable(graph.n)

    def mindeg(self) -> int:
        self.ledger.charge("mdcp_mindeg", 1, self.costs.mindeg)
        return int(self._g.degrees.min())

    def nbh(self, v: int) -> np.ndarray:
        self.ledger.charge("mdcp_nbh", 1, self.costs.nbh)
        return self._g.neighbors(int(v)).copy()

    def spf(self, removed=None) -> np.ndarray:
        """A spanning forest of (V, E minus removed)."""
        self.ledger.charge("mdcp_spf", 1, self.costs.spf)
        e = self._g.edges()
        if removed is not None and len(removed):
            rem = np.asarray(removed, dtype=np.int64).reshape(-1, 2)
            rk = np.minimum(rem[:, 0], rem[:, 1]) * self.n + np.maximum(rem[:, 0], rem[:, 1])
            ek = e[:, 0] * self.n + e[:, 1]
            if not np.all(np.isin(rk, ek)):
                raise InvalidInput("spf: removed set contains a non-edge")
            e = e[~np.isin(ek, rk)]
        slot = _kernels.least_index_forests(self.n, e[:, 0].copy(), e[:, 1].copy(), 1)
        return e[slot == 0]

    def cut(self, S) -> int:
        self.ledger.charge("mdcp_cut", 1, self.costs.cut)
        return self._g.cut_value(as_mask(S, self.n))

    def mdcp(self, kind: str, arg=None):
        if kind == "mindeg":
            return self.mindeg()
        if kind == "nbh":
            return self.nbh(arg)
        if kind == "spf":
            return self.spf(arg)
        if kind == "cut":
            return self.cut(arg)
        raise InvalidInput(f"unknown MDCP primitive {kind!r}")

    def modeled_min_cut(self, labels):
        return CutOracle(self._g, self.ledger).modeled_min_cut(labels)
