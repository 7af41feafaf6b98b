"""Learning sparse bipartite blocks from additive x^T M y queries.

The exact learner (`learn_bounded_matrix`) halves each row's column range
until an interval holds a single one, then reads the offset of that one
through bit-mask measurements. Rows that share an interval are decoded
together by coin weighing, which is where the saving over row-by-row search
comes from. Everything above it (LearnBucket,
Recover-k-From-All and the clocked wrapper) follows the bucketed sampling
recipe and only relies on the exact learner.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import _kernels
from ._kernels import csr_pair_answers

from .errors import FAIL, ClockExpired, ContractViolation, InvalidInput

# learner constants (see budget())
C_LEARN = 12.0
C_ZERO = 64
MAX_WEIGHING_LEVEL = 10
# expected-query constant of recover_k_from_all, used by the clocked wrapper
C_EXPECTED = 10.0


# ---------------------------------------------------------------------------
# separating matrices (brute-force verification only)

@dataclass
class SeparatingMatrix:
    """Boolean matrix plus the vector set it is meant to separate.

    kind "full" means {0..bound}^n, kind "sparse" means 0/1 vectors with at
    most `bound` ones.
    """
    matrix: np.ndarray
    kind: str
    bound: int

    @property
    def shape(self):
        return self.matrix.shape

    def target_size(self) -> int:
        n = self.matrix.shape[1]
        if self.kind == "full":
            return (self.bound + 1) ** n
        if self.kind == "sparse":
            return sum(math.comb(n, j) for j in range(min(self.bound, n) + 1))
        raise InvalidInput(f"unknown target kind {self.kind!r}")


def _enumerate_targets(B: SeparatingMatrix) -> np.ndarray:
    n = B.matrix.shape[1]
    if B.kind == "full":
        grid = np.indices((B.bound + 1,) * n).reshape(n, -1).T
        return grid.astype(np.int64)
    rows = []
    for j in range(min(B.bound, n) + 1):
        for combo in itertools.combinations(range(n), j):
            x = np.zeros(n, dtype=np.int64)
            x[list(combo)] = 1
            rows.append(x)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def is_separating_bruteforce(B: SeparatingMatrix, limit: int = 2_000_000) -> bool:
    size = B.target_size()
    if size > limit:
        raise InvalidInput(f"target set has {size} members, more than the limit {limit}")
    X = _enumerate_targets(B)
    images = X @ B.matrix.astype(np.int64).T
    return np.unique(images, axis=0).shape[0] == X.shape[0]


def random_separating_candidate(n: int, ell: int, rng, c: float = 2.0) -> SeparatingMatrix:
    """Random Bernoulli(1/2) matrix with ceil(c * ell * log2(2n) / log2(2 ell)) rows."""
    k = max(1, math.ceil(c * ell * math.log2(2 * n) / math.log2(2 * max(ell, 1))))
    return SeparatingMatrix(rng.random((k, n)) < 0.5, "sparse", ell)


# ---------------------------------------------------------------------------
# coin weighing with 0/1 rows
#
# M_{k+1} = [[M_k, M_k, I], [M_k, J - M_k, 0], [0, 1, 0]] over columns
# (x1, x2, x3). The last row weighs x2 alone, which turns the complemented
# block into a difference; parity then separates x3 from the sum.

@lru_cache(maxsize=None)
def weighing_matrix(level: int) -> np.ndarray:
    """0/1 matrix with 2^(level+1) - 1 rows that identifies any 0/1 vector
    of length weighing_columns(level)."""
    M = np.ones((1, 1), dtype=np.int8)
    for _ in range(level):
        rows, cols = M.shape
        top = np.hstack([M, M, np.eye(rows, dtype=np.int8)])
        bottom = np.hstack([M, 1 - M, np.zeros((rows, rows), dtype=np.int8)])
        last = np.hstack([np.zeros(cols, dtype=np.int8), np.ones(cols, dtype=np.int8),
                          np.zeros(rows, dtype=np.int8)])
        M = np.vstack([top, bottom, last[None, :]])
    M.setflags(write=False)
    return M


@lru_cache(maxsize=None)
def weighing_columns(level: int) -> int:
    return 1 if level == 0 else 2 * weighing_columns(level - 1) + 2 ** level - 1


def weighing_rows(level: int) -> int:
    return 2 ** (level + 1) - 1


def weighing_level(count: int) -> int:
    k = 0
    while weighing_columns(k) < count and k < MAX_WEIGHING_LEVEL:
        k += 1
    return k


def decode_weighing(level: int, answers) -> np.ndarray:
    """Invert `weighing_matrix(level) @ x = answers` for a 0/1 vector x.

    A 2-D `answers` decodes one column per vector.
    """
    a = np.asarray(answers, dtype=np.int64)
    if level == 0:
        return a.copy()
    rows = weighing_rows(level - 1)
    top, bottom, s2 = a[:rows], a[rows:2 * rows], a[2 * rows]
    both = top + bottom - s2
    x3 = both % 2
    m1 = (both - x3) // 2
    m2 = top - x3 - m1
    return np.concatenate([decode_weighing(level - 1, m1), decode_weighing(level - 1, m2), x3])


# ---------------------------------------------------------------------------
# row-sparse exact learning

def budget(m: int, n: int, ell: int) -> int:
    """Upper bound on learn_bounded_matrix queries when row totals are supplied.

    Add m when the totals are measured by the learner itself.
    """
    if m == 0:
        return C_ZERO
    return int(C_LEARN * max(ell, 1) * m * math.ceil(math.log2(2 * n)) / math.ceil(math.log2(2 * m))) + C_ZERO


def count_row_ones(block, rows=None, cols_mask=None) -> np.ndarray:
    """One query per row: the number of ones of each row (inside cols_mask)."""
    m, n = block.shape
    rows = np.arange(m) if rows is None else np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(n, dtype=bool) if cols_mask is None else np.asarray(cols_mask, dtype=bool)
    if not mask.any():
        return np.zeros(rows.size, dtype=np.int64)
    block._charge(rows.size)
    M = block._csr()
    return _kernels.row_mask_counts(M.indptr, M.indices, rows, mask)


def _indicator_rows(sets, width):
    """CSR matrix whose a-th row is the indicator of sets[a] (no repeats inside a set)."""
    lens = np.fromiter((len(s) for s in sets), np.int64, len(sets))
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    if indptr[-1] == 0:
        return sp.csr_matrix((len(sets), width), dtype=np.int64)
    cols = np.concatenate([np.asarray(s, dtype=np.int64) for s in sets])
    return sp.csr_matrix((np.ones(cols.size, dtype=np.int64), cols, indptr), shape=(len(sets), width))


def learn_bounded_matrix_reference(block, ell: int, row_totals=None) -> list[np.ndarray]:
    """Readable form of learn_bounded_matrix: every query goes through block.pairs.

    Recover every one of a row-sparse Boolean block exactly.

    block offers `shape`, `grid(X, Y)` and `pairs(X, Y)` over row/column
    indicator matrices. Each row halves its column range while an interval
    holds two or more of its ones (one query per split). As soon as an
    interval holds a single one, the row joins the group of rows sharing that
    interval; the offset bits of the lone ones are then read for the whole
    group at once by coin weighing. Deterministic. Returns sorted column lists.
    """
    m, n = block.shape
    if m == 0:
        return []
    if n == 0:
        return [np.zeros(0, dtype=np.int64) for _ in range(m)]
    totals = count_row_ones(block) if row_totals is None else np.asarray(row_totals, dtype=np.int64)
    if np.any(totals > ell):
        bad = int(np.flatnonzero(totals > ell)[0])
        raise ContractViolation(f"row {bad} has {int(totals[bad])} ones, more than {ell}")
    found: list[list[int]] = [[] for _ in range(m)]
    singles: dict[tuple[int, int], list[int]] = {}
    frontier = [(int(i), 0, n, int(totals[i])) for i in np.flatnonzero(totals > 0)]
    while frontier:
        qx, qy, pend = [], [], []
        for i, lo, hi, cnt in frontier:
            if cnt == hi - lo:
                found[i].extend(range(lo, hi))
            elif cnt == 1:
                singles.setdefault((lo, hi), []).append(i)
            else:
                mid = lo + (hi - lo + 1) // 2
                qx.append([i])
                qy.append(np.arange(lo, mid))
                pend.append((i, lo, mid, hi, cnt))
        if not pend:
            break
        ans = block.pairs(_indicator_rows(qx, m), _indicator_rows(qy, n))
        frontier = []
        for (i, lo, mid, hi, cnt), a in zip(pend, ans):
            a = int(a)
            if a:
                frontier.append((i, lo, mid, a))
            if cnt - a:
                frontier.append((i, mid, hi, cnt - a))
    _read_single_offsets(block, singles, found)
    return [np.array(sorted(r), dtype=np.int64) for r in found]


def learn_bounded_matrix(block, ell: int, row_totals=None) -> list[np.ndarray]:
    """Recover every one of a row-sparse Boolean block exactly.

    Same queries, in the same number, as learn_bounded_matrix_reference. The
    answers come from two structured query shapes (one row against a column
    interval, a set of rows against the bit-t columns of an interval) that are
    evaluated in compiled code instead of through general indicator vectors.
    """
    m, n = block.shape
    if m == 0:
        return []
    if n == 0:
        return [np.zeros(0, dtype=np.int64) for _ in range(m)]
    totals = count_row_ones(block) if row_totals is None else np.asarray(row_totals, dtype=np.int64)
    if np.any(totals > ell):
        bad = int(np.flatnonzero(totals > ell)[0])
        raise ContractViolation(f"row {bad} has {int(totals[bad])} ones, more than {ell}")
    M = block._csr()
    found_rows, found_cols = [], []
    empty = np.zeros(0, dtype=np.int64)
    single_parts = [(empty, empty, empty)]
    rows = np.flatnonzero(totals > 0).astype(np.int64)
    lo = np.zeros(rows.size, dtype=np.int64)
    hi = np.full(rows.size, n, dtype=np.int64)
    cnt = totals[rows].astype(np.int64)
    while rows.size:
        full = cnt == hi - lo
        if full.any():
            width = hi[full] - lo[full]
            found_rows.append(np.repeat(rows[full], width))
            start = np.repeat(lo[full] - np.cumsum(width) + width, width)
            found_cols.append(start + np.arange(int(width.sum()), dtype=np.int64))
        single = (cnt == 1) & ~full
        single_parts.append((rows[single], lo[single], hi[single]))
        split = ~full & ~single
        rows, lo, hi, cnt = rows[split], lo[split], hi[split], cnt[split]
        if not rows.size:
            break
        mid = lo + (hi - lo + 1) // 2
        block._charge(rows.size)
        a = _kernels.row_interval_counts(M.indptr, M.indices, rows, lo, mid)
        left, right = a > 0, cnt - a > 0
        rows = np.concatenate([rows[left], rows[right]])
        cnt = np.concatenate([a[left], (cnt - a)[right]])
        lo, hi = np.concatenate([lo[left], mid[right]]), np.concatenate([mid[left], hi[right]])
    srow = np.concatenate([p[0] for p in single_parts])
    slo = np.concatenate([p[1] for p in single_parts])
    shi = np.concatenate([p[2] for p in single_parts])
    if srow.size:
        offsets = _weighed_offsets(block, M, srow, slo, shi)
        found_rows.append(srow)
        found_cols.append(slo + offsets)
    out = [np.zeros(0, dtype=np.int64) for _ in range(m)]
    if found_rows:
        fr, fc = np.concatenate(found_rows), np.concatenate(found_cols)
        order = np.lexsort((fc, fr))
        fr, fc = fr[order], fc[order]
        starts = np.searchsorted(fr, np.arange(m + 1))
        out = [fc[starts[i]:starts[i + 1]] for i in range(m)]
    return out


def _weighed_offsets(block, M, rows, lo, hi) -> np.ndarray:
    """Offset of the lone one of each (row, [lo, hi)), read bit by bit with
    rows sharing an interval weighed together."""
    nbits = np.ceil(np.log2(hi - lo)).astype(np.int64)
    width = max(int(nbits.max()), 1)
    counts = _kernels.row_bit_counts(M.indptr, M.indices, rows, lo, hi, width)
    bits = np.zeros_like(counts)
    order = np.lexsort((hi, lo))
    key_lo, key_hi = lo[order], hi[order]
    cut = np.flatnonzero((np.diff(key_lo) != 0) | (np.diff(key_hi) != 0)) + 1
    charged = 0
    by_level = {}
    for group in np.split(order, cut):
        t_n = int(nbits[group[0]])
        s = 0
        for size, lvl in _weighing_pieces(group.size):
            chunk = group[s:s + size]
            s += size
            if lvl is None:
                charged += chunk.size * t_n
                bits[chunk, :t_n] = counts[chunk, :t_n]
            else:
                charged += _live_weighing_rows(lvl, chunk.size) * t_n
                by_level.setdefault(lvl, []).append((chunk, t_n))
    block._charge(charged)
    for lvl, items in by_level.items():
        # one column per (piece, bit); coins past a piece's size are absent (zero)
        cols = weighing_columns(lvl)
        total = sum(t for _, t in items)
        X = np.zeros((cols, total), dtype=np.int64)
        at = 0
        for chunk, t_n in items:
            X[:chunk.size, at:at + t_n] = counts[chunk, :t_n]
            at += t_n
        decoded = decode_weighing(lvl, _weighing_int(lvl) @ X)
        at = 0
        for chunk, t_n in items:
            bits[chunk, :t_n] = decoded[:chunk.size, at:at + t_n]
            at += t_n
    if np.any((bits != 0) & (bits != 1)):
        raise ContractViolation("offset decoding saw a non-binary answer")
    return bits @ (1 << np.arange(width, dtype=np.int64))


@lru_cache(maxsize=None)
def _weighing_int(level: int) -> np.ndarray:
    return weighing_matrix(level).astype(np.int64)


@lru_cache(maxsize=None)
def _live_weighing_rows(level: int, size: int) -> int:
    # rows of the weighing design that touch at least one present coin
    return int(np.count_nonzero(weighing_matrix(level)[:, :size].any(axis=1)))


@lru_cache(maxsize=None)
def _piece_table() -> tuple[np.ndarray, np.ndarray]:
    """Cheapest split of s binary answers into weighing pieces, for every s up
    to the largest weighing width: (cost, level of the first piece or -1)."""
    cap = weighing_columns(MAX_WEIGHING_LEVEL)
    cost = np.arange(cap + 1, dtype=np.int64)
    first = np.full(cap + 1, -1, dtype=np.int64)
    for size in range(1, cap + 1):
        for lvl in range(2, MAX_WEIGHING_LEVEL + 1):
            take = min(size, weighing_columns(lvl))
            c = weighing_rows(lvl) + cost[size - take]
            if c < cost[size]:
                cost[size] = c
                first[size] = lvl
            if take == size:
                break
    return cost, first


@lru_cache(maxsize=None)
def _weighing_pieces(size: int) -> list[tuple[int, int | None]]:
    """[(piece size, level or None for direct reads)] covering `size` answers."""
    cost, first = _piece_table()
    cap = cost.size - 1
    out = []
    while size > cap:
        out.append((cap, MAX_WEIGHING_LEVEL))
        size -= cap
    while size > 0:
        lvl = int(first[size])
        if lvl < 0:
            out.append((size, None))
            break
        take = min(size, weighing_columns(lvl))
        out.append((take, lvl))
        size -= take
    return out


def _read_single_offsets(block, singles, found):
    m, n = block.shape
    qx, qy = [], []
    direct, weighed = [], {}
    for (lo, hi), rows in sorted(singles.items()):
        rows = np.asarray(rows, dtype=np.int64)
        nbits = math.ceil(math.log2(hi - lo))
        offs = np.arange(hi - lo)
        pieces, s = [], 0
        for size, lvl in _weighing_pieces(rows.size):
            pieces.append((rows[s:s + size], lvl))
            s += size
        for t in range(nbits):
            mask = lo + offs[(offs >> t) & 1 == 1]
            for chunk, lvl in pieces:
                if lvl is None:
                    direct.append((lo, t, chunk, len(qx)))
                    qx.extend([i] for i in chunk)
                    qy.extend([mask] * chunk.size)
                    continue
                W = weighing_matrix(lvl)[:, :chunk.size]
                pidx = np.full(W.shape[0], -1, dtype=np.int64)
                for a, arow in enumerate(W):
                    part = chunk[arow == 1]
                    if part.size:
                        pidx[a] = len(qx)
                        qx.append(part)
                        qy.append(mask)
                weighed.setdefault(lvl, []).append((lo, t, chunk, pidx))
    if not qx:
        return
    ans = np.append(block.pairs(_indicator_rows(qx, m), _indicator_rows(qy, n)).astype(np.int64), 0)
    offset: dict[tuple[int, int], int] = {}

    def absorb(lo, t, chunk, bits):
        if np.any((bits != 0) & (bits != 1)):
            raise ContractViolation("offset decoding saw a non-binary answer")
        for i, bit in zip(chunk.tolist(), bits.tolist()):
            offset[(i, lo)] = offset.get((i, lo), 0) | (bit << t)

    for lo, t, chunk, start in direct:
        absorb(lo, t, chunk, ans[start:start + chunk.size])
    for lvl, items in weighed.items():
        # index -1 reads the appended zero
        vals = np.stack([ans[p] for _, _, _, p in items], axis=1)
        # weighing columns past a chunk stand for absent coins (zero)
        bits = decode_weighing(lvl, vals)
        for col, (lo, t, chunk, _) in enumerate(items):
            absorb(lo, t, chunk, bits[:chunk.size, col])
    for (lo, hi), rows in singles.items():
        for i in rows:
            found[i].append(lo + offset.get((int(i), lo), 0))


def learn_matrix_by_search(block, row_totals=None) -> list[np.ndarray]:
    """Reference learner: independent per-row halving search, O(ell m log n) queries."""
    m, n = block.shape
    if m == 0:
        return []
    totals = count_row_ones(block) if row_totals is None else np.asarray(row_totals, dtype=np.int64)
    found: list[list[int]] = [[] for _ in range(m)]
    frontier = [(int(i), 0, n, int(totals[i])) for i in np.flatnonzero(totals > 0)]
    while frontier:
        qx, qy, pend = [], [], []
        for i, lo, hi, cnt in frontier:
            if cnt == hi - lo:
                found[i].extend(range(lo, hi))
                continue
            mid = lo + (hi - lo + 1) // 2
            qx.append([i])
            qy.append(np.arange(lo, mid))
            pend.append((i, lo, mid, hi, cnt))
        if not pend:
            break
        ans = block.pairs(_indicator_rows(qx, m), _indicator_rows(qy, n))
        frontier = []
        for (i, lo, mid, hi, cnt), a in zip(pend, ans):
            a = int(a)
            if a:
                frontier.append((i, lo, mid, a))
            if cnt - a:
                frontier.append((i, mid, hi, cnt - a))
    return [np.array(sorted(r), dtype=np.int64) for r in found]


# ---------------------------------------------------------------------------
# blocks over explicit matrices (tests, streaming, restricted sub-blocks)

class MatrixBlock:
    """x^T M y access to an explicit Boolean matrix, counting queries."""

    def __init__(self, M):
        self._M = sp.csr_matrix(M, dtype=np.int64)
        self._M.sort_indices()
        self.shape = self._M.shape
        self.queries = 0

    def _csr(self):
        return self._M

    def _charge(self, k):
        self.queries += int(k)

    def grid(self, X, Y):
        X = sp.csr_matrix(X, dtype=np.int64)
        Y = sp.csr_matrix(Y, dtype=np.int64)
        self._charge(np.count_nonzero(np.diff(X.indptr)) * np.count_nonzero(np.diff(Y.indptr)))
        return np.asarray((X @ self._M @ Y.T).todense())

    def pairs(self, X, Y):
        X = sp.csr_matrix(X, dtype=np.int64)
        Y = sp.csr_matrix(Y, dtype=np.int64)
        self._charge(np.count_nonzero((np.diff(X.indptr) > 0) & (np.diff(Y.indptr) > 0)))
        return csr_pair_answers(self._M, X, Y)

    def truth(self):
        return self._M.copy()


class _Pattern(NamedTuple):
    indptr: np.ndarray
    indices: np.ndarray


class SubBlock:
    """Rows `rows` and columns `cols` of a parent block; queries are forwarded."""

    def __init__(self, parent, rows, cols):
        self.parent = parent
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.shape = (self.rows.size, self.cols.size)
        self._M = None

    def _charge(self, k):
        self.parent._charge(k)

    def _csr(self):
        if self._M is None:
            P = self.parent._csr()
            # parent indices are sorted and columns are taken in order, so the result stays sorted
            self._M = _Pattern(*_kernels.csr_take(P.indptr, P.indices, self.rows, self.cols,
                                                 self.parent.shape[1]))
        return self._M

    @staticmethod
    def _lift(X, ids, width):
        X = sp.csr_matrix(X, dtype=np.int64)
        return sp.csr_matrix((X.data, ids[X.indices], X.indptr), shape=(X.shape[0], width))

    def grid(self, X, Y):
        pm, pn = self.parent.shape
        return self.parent.grid(self._lift(X, self.rows, pm), self._lift(Y, self.cols, pn))

    def pairs(self, X, Y):
        pm, pn = self.parent.shape
        return self.parent.pairs(self._lift(X, self.rows, pm), self._lift(Y, self.cols, pn))


# ---------------------------------------------------------------------------
# bucketed recovery

@dataclass
class AdjacencyLists:
    """Per-row learned column ids (block coordinates) and the row degrees."""
    lists: list
    degrees: np.ndarray
    accepted: dict = field(default_factory=dict)  # row -> accepted sample mask, when recorded

    def __len__(self):
        return len(self.lists)


@dataclass
class BucketPlan:
    floor: int
    buckets: dict  # a -> row indices with degree in [floor 2^a, floor 2^(a+1))


def plan_buckets(degrees) -> BucketPlan:
    deg = np.asarray(degrees, dtype=np.int64)
    if deg.size == 0:
        return BucketPlan(1, {})
    if np.any(deg <= 0):
        raise InvalidInput("every row needs at least one one")
    d = int(deg.min())
    a = np.floor(np.log2(deg / d)).astype(np.int64)
    # guard against floating rounding at exact powers of two
    a -= (d * 2 ** a > deg)
    a += (d * 2 ** (a + 1) <= deg)
    return BucketPlan(d, {int(x): np.flatnonzero(a == x) for x in np.unique(a)})


def learn_bucket(block, r: int, k: int, rng, degrees=None, record: bool = False,
                 max_iterations: int = 1_000_000) -> AdjacencyLists:
    """Learn at least min(r, k) ones of each row of a block whose rows have r..2r ones."""
    m, n = block.shape
    lists = [np.zeros(0, dtype=np.int64) for _ in range(m)]
    accepted = {}
    deg = None if degrees is None else np.asarray(degrees, dtype=np.int64)
    q = min(2 * k / r, 1.0)
    lo_ok, hi_ok = min(r, k), 8 * k
    pending = np.arange(m)
    it = 0
    while pending.size:
        it += 1
        if it > max_iterations:
            raise RuntimeError("learn_bucket iteration guard hit")
        Q = np.ones(n, dtype=bool) if q >= 1.0 else rng.random(n) < q
        qcols = np.flatnonzero(Q)
        if q >= 1.0 and deg is not None:
            ones = deg[pending]
        else:
            ones = count_row_ones(block, pending, Q)
        caught = (ones >= lo_ok) & (ones <= hi_ok)
        K = pending[caught]
        if K.size:
            sub = SubBlock(block, K, qcols)
            found = learn_bounded_matrix(sub, hi_ok if q < 1.0 else max(int(ones[caught].max()), 1),
                                         row_totals=ones[caught])
            for i, cols in zip(K, found):
                lists[i] = qcols[cols]
                if record:
                    accepted[int(i)] = Q.copy()
            pending = pending[~caught]
    return AdjacencyLists(lists, deg if deg is not None else np.array([l.size for l in lists]), accepted)


def recover_k_from_all(block, k: int, rng, degrees=None, record: bool = False) -> AdjacencyLists:
    """At least min(k, d) ones per row, where d is the smallest row total."""
    m, n = block.shape
    if degrees is None:
        degrees = count_row_ones(block)
    degrees = np.asarray(degrees, dtype=np.int64)
    if np.any(degrees <= 0):
        raise InvalidInput("recover_k_from_all needs every row to contain a one")
    plan = plan_buckets(degrees)
    lists = [np.zeros(0, dtype=np.int64) for _ in range(m)]
    accepted = {}
    for a in sorted(plan.buckets):
        rows = plan.buckets[a]
        sub = SubBlock(block, rows, np.arange(n))
        got = learn_bucket(sub, plan.floor * 2 ** a, k, rng, degrees=degrees[rows], record=record)
        for local, i in enumerate(rows):
            lists[i] = got.lists[local]
            if record and local in got.accepted:
                accepted[int(i)] = got.accepted[local]
    return AdjacencyLists(lists, degrees, accepted)


def expected_recover_queries(m: int, n: int, k: int) -> float:
    """Expected bip_product count of recover_k_from_all, up to the constant C_EXPECTED."""
    if m == 0:
        return 0.0
    logn = math.log2(2 * max(n, 1))
    denom = math.log2(max(2 * m / logn, 2.0))
    return C_EXPECTED * (m + k * m * logn / denom)


@dataclass
class DirectedSubgraph:
    """Arc set over vertices 0..n-1 (arc u -> v means {u, v} is a base edge)."""
    n: int
    src: np.ndarray
    dst: np.ndarray

    @classmethod
    def empty(cls, n):
        z = np.zeros(0, dtype=np.int64)
        return cls(n, z, z.copy())

    @classmethod
    def from_lists(cls, n, heads, lists):
        lens = [len(l) for l in lists]
        if sum(lens) == 0:
            return cls.empty(n)
        src = np.repeat(np.asarray(heads, dtype=np.int64), lens)
        dst = np.concatenate([np.asarray(l, dtype=np.int64) for l in lists])
        return cls(n, src, dst)

    @classmethod
    def from_graph(cls, G, vertices=None):
        """Both orientations of every edge (restricted to arcs leaving `vertices`)."""
        e = G.edges()
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        if vertices is not None:
            keep = np.zeros(G.n, dtype=bool)
            keep[np.asarray(vertices, dtype=np.int64)] = True
            sel = keep[src]
            src, dst = src[sel], dst[sel]
        return cls(G.n, src, dst)

    def union(self, other: "DirectedSubgraph") -> "DirectedSubgraph":
        return DirectedSubgraph(self.n, np.concatenate([self.src, other.src]),
                                np.concatenate([self.dst, other.dst]))

    def without_out_arcs(self, v) -> "DirectedSubgraph":
        keep = self.src != v
        return DirectedSubgraph(self.n, self.src[keep], self.dst[keep])

    @property
    def arcs(self) -> int:
        return int(self.src.size)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n)

    def check(self, G) -> bool:
        if np.any(self.src == self.dst):
            return False
        return bool(G.has_edges(np.stack([self.src, self.dst], axis=1)).all())


def wc_recover_k_from_all(oracle, S, T, k: int, rng, clock_factor: float = 100.0,
                          min_degree: int | None = None, degrees=None):
    """Recover-k-From-All on A(S, T) with a worst-case clock; FAIL when the clock runs out.

    The clock is clock_factor times the expected bip_product count (3 cut units each).
    """
    S = np.asarray(S, dtype=np.int64)
    T = np.asarray(T, dtype=np.int64)
    n_all = oracle.n
    if S.size == 0:
        return DirectedSubgraph.empty(n_all)
    block = oracle.bipartite_block(S, T)
    limit = clock_factor * 3 * expected_recover_queries(S.size, T.size, k)
    try:
        with oracle.ledger.clock(limit) as clk:
            if degrees is None:
                degrees = count_row_ones(block)
            degrees = np.asarray(degrees, dtype=np.int64)
            floor = 1 if min_degree is None else max(int(min_degree), 1)
            if np.any(degrees < floor):
                raise ContractViolation("a row of A(S, T) has fewer ones than promised")
            got = recover_k_from_all(block, k, rng, degrees=degrees)
    except ClockExpired as exc:
        if exc.clock is not clk:
            raise
        return FAIL
    return DirectedSubgraph.from_lists(n_all, S, [T[l] for l in got.lists])
