import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutbench import generators
from cutbench.cut_oracle import CutOracle
from cutbench.errors import FAIL, ContractViolation, InvalidInput
from cutbench.sparse_recovery import (
    MatrixBlock,
    SeparatingMatrix,
    SubBlock,
    budget,
    decode_weighing,
    is_separating_bruteforce,
    learn_bounded_matrix,
    learn_bounded_matrix_reference,
    learn_bucket,
    learn_matrix_by_search,
    plan_buckets,
    random_separating_candidate,
    recover_k_from_all,
    wc_recover_k_from_all,
    weighing_columns,
    weighing_matrix,
)


def rows_with_ones(rng, m, n, counts):
    M = np.zeros((m, n), dtype=np.int8)
    for i, c in enumerate(counts):
        M[i, rng.choice(n, int(c), replace=False)] = 1
    return M


def as_rows(M):
    return [np.flatnonzero(r) for r in np.asarray(M)]


def separates_by_pairs(B, vectors):
    """Plain pairwise image comparison."""
    imgs = [tuple(B.astype(int) @ v) for v in vectors]
    return all(imgs[i] != imgs[j] for i, j in itertools.combinations(range(len(imgs)), 2))


def test_separating_examples(rng):
    for n in (1, 5, 12):
        assert is_separating_bruteforce(SeparatingMatrix(np.eye(n, dtype=bool), "full", 1))
        assert not is_separating_bruteforce(SeparatingMatrix(np.zeros((3, n), dtype=bool), "sparse", 1))
    sparse2 = [np.array(v) for v in itertools.product((0, 1), repeat=8) if sum(v) <= 2]
    for _ in range(10):
        B = rng.random((12, 8)) < 0.5
        assert is_separating_bruteforce(SeparatingMatrix(B, "sparse", 2)) == separates_by_pairs(B, sparse2)


def test_separating_refuses_huge_sets():
    with pytest.raises(InvalidInput):
        is_separating_bruteforce(SeparatingMatrix(np.eye(30, dtype=bool), "full", 2))


@pytest.mark.parametrize("n,ell", [(8, 1), (12, 2), (16, 2), (16, 3)])
def test_random_separating_candidates_exist(n, ell):
    rng = np.random.default_rng(n * 10 + ell)
    hits = sum(is_separating_bruteforce(random_separating_candidate(n, ell, rng)) for _ in range(20))
    assert hits >= 1


@pytest.mark.parametrize("level", range(0, 5))
def test_weighing_decodes_every_vector(level):
    W = weighing_matrix(level).astype(np.int64)
    width = weighing_columns(level)
    assert W.shape[1] == width
    X = np.array(list(itertools.product((0, 1), repeat=width)), dtype=np.int64).T if width <= 12 else None
    if X is None:
        X = (np.random.default_rng(level).random((width, 500)) < 0.5).astype(np.int64)
    assert np.array_equal(decode_weighing(level, W @ X), X)


def test_learn_bounded_matrix_examples(rng):
    Z = MatrixBlock(np.zeros((20, 30), dtype=np.int8))
    assert all(r.size == 0 for r in learn_bounded_matrix(Z, 1))
    assert Z.queries <= budget(20, 30, 1) + 20
    I = MatrixBlock(np.eye(64, dtype=np.int8))
    got = learn_bounded_matrix(I, 1)
    assert all(list(r) == [i] for i, r in enumerate(got))
    M = rows_with_ones(rng, 256, 256, [3] * 256)
    blk = MatrixBlock(M)
    got = learn_bounded_matrix(blk, 3)
    assert all(np.array_equal(a, b) for a, b in zip(got, as_rows(M)))
    assert blk.queries <= budget(256, 256, 3) + 256


def test_learn_bounded_matrix_exact_on_random_instances(rng):
    for _ in range(500):
        m, n = int(rng.integers(1, 513)), int(rng.integers(1, 513))
        ell = int(rng.integers(1, 9))
        counts = rng.integers(0, min(ell, n) + 1, m)
        M = rows_with_ones(rng, m, n, counts)
        blk = MatrixBlock(M)
        got = learn_bounded_matrix(blk, ell)
        assert all(np.array_equal(a, b) for a, b in zip(got, as_rows(M)))
        assert blk.queries <= budget(m, n, ell) + m


def test_fast_learner_asks_what_the_reference_asks(rng):
    for _ in range(40):
        m, n = int(rng.integers(1, 120)), int(rng.integers(1, 300))
        ell = int(rng.integers(1, 6))
        M = rows_with_ones(rng, m, n, rng.integers(0, min(ell, n) + 1, m))
        a, b = MatrixBlock(M), MatrixBlock(M)
        fast, ref = learn_bounded_matrix(a, ell), learn_bounded_matrix_reference(b, ell)
        assert all(np.array_equal(x, y) for x, y in zip(fast, ref))
        assert a.queries == b.queries


def test_search_learner_is_exact(rng):
    M = rows_with_ones(rng, 50, 80, rng.integers(0, 6, 50))
    got = learn_matrix_by_search(MatrixBlock(M))
    assert all(np.array_equal(np.sort(a), b) for a, b in zip(got, as_rows(M)))


def test_learner_flags_overfull_rows(rng):
    M = rows_with_ones(rng, 4, 40, [2, 9, 1, 0])
    with pytest.raises(ContractViolation):
        learn_bounded_matrix(MatrixBlock(M), 3)


def test_sub_block_forwards_queries(rng):
    M = rows_with_ones(rng, 30, 60, rng.integers(1, 5, 30))
    parent = MatrixBlock(M)
    rows, cols = np.array([1, 4, 7, 20]), np.arange(10, 50, 2)
    sub = SubBlock(parent, rows, cols)
    got = learn_bounded_matrix(sub, 4)
    for local, i in enumerate(rows):
        assert np.array_equal(cols[got[local]], np.flatnonzero(M[i] & np.isin(np.arange(60), cols)))
    assert parent.queries > 0


def test_plan_buckets_example():
    plan = plan_buckets([5, 11, 23])
    assert plan.floor == 5
    assert {a: list(v) for a, v in plan.buckets.items()} == {0: [0], 1: [1], 2: [2]}
    with pytest.raises(InvalidInput):
        plan_buckets([3, 0])


@given(st.lists(st.integers(1, 5000), min_size=1, max_size=40))
def test_buckets_partition_rows_by_degree(deg):
    plan = plan_buckets(deg)
    seen = np.concatenate(list(plan.buckets.values()))
    assert sorted(seen.tolist()) == list(range(len(deg)))
    for a, rows in plan.buckets.items():
        for j in rows:
            assert plan.floor * 2 ** a <= deg[j] < plan.floor * 2 ** (a + 1)


def test_learn_bucket_one_pass_when_q_is_one(rng):
    k = 10
    M = rows_with_ones(rng, 40, 200, rng.integers(12, 21, 40))
    blk = MatrixBlock(M)
    got = learn_bucket(blk, 12, k, rng)
    assert all(np.array_equal(a, b) for a, b in zip(got.lists, as_rows(M)))


def test_learn_bucket_single_row(rng):
    M = rows_with_ones(rng, 1, 500, [40])
    got = learn_bucket(MatrixBlock(M), 40, 10, rng)
    assert got.lists[0].size >= 10 and M[0, got.lists[0]].all()


class _AllColumns:
    """Stands in for a generator whose coins always include every column."""

    def random(self, size):
        return np.zeros(size)


def test_learn_bucket_rejects_samples_above_8k():
    k = 10
    M = np.zeros((1, 200), dtype=np.int8)
    M[0, :8 * k + 1] = 1
    # r > 2k so each column is sampled with q < 1, but every draw keeps all 8k+1 ones
    with pytest.raises(RuntimeError):
        learn_bucket(MatrixBlock(M), 8 * k + 1, k, _AllColumns(), max_iterations=5)


def test_learn_bucket_sampling_contract(rng):
    k = 10
    for r in (25, 60, 150):
        M = rows_with_ones(rng, 30, 1200, rng.integers(r, 2 * r + 1, 30))
        got = learn_bucket(MatrixBlock(M), r, k, rng, record=True)
        for i, Q in got.accepted.items():
            inside = np.flatnonzero(M[i] & Q)
            assert min(r, k) <= inside.size <= 8 * k
            # the row's list is exactly its ones inside the accepted sample
            assert np.array_equal(np.sort(got.lists[i]), inside)


def test_recover_examples(rng):
    got = recover_k_from_all(MatrixBlock(np.eye(8, dtype=np.int8)), 10, rng)
    assert [list(l) for l in got.lists] == [[i] for i in range(8)]
    got = recover_k_from_all(MatrixBlock(np.ones((16, 16), dtype=np.int8)), 10, rng)
    assert all(np.unique(l).size >= 10 for l in got.lists)
    with pytest.raises(InvalidInput):
        recover_k_from_all(MatrixBlock(np.array([[1, 0], [0, 0]])), 10, rng)


def test_recover_degree_pass_costs_m_queries(rng):
    M = rows_with_ones(rng, 37, 50, [1] * 37)
    blk = MatrixBlock(M)
    recover_k_from_all(blk, 10, rng)
    # rows of degree 1: one query per row for the totals, then a single bucket with q = 1
    assert blk.queries >= 37


def test_recover_zero_error_fuzz(rng):
    for _ in range(1000):
        m, n = int(rng.integers(1, 60)), int(rng.integers(1, 200))
        deg = rng.integers(1, n + 1, m)
        M = rows_with_ones(rng, m, n, deg)
        got = recover_k_from_all(MatrixBlock(M), 10, rng)
        need = min(10, int(deg.min()))
        for i, l in enumerate(got.lists):
            assert M[i, l].all()
            assert np.unique(l).size >= need


def test_wc_recover_examples(rng):
    G = generators.complete(30)
    o = CutOracle(G)
    S, T = np.array([0]), np.arange(1, 30)
    H = wc_recover_k_from_all(o, S, T, 10, rng)
    assert H.arcs >= 10 and H.check(G) and set(H.src.tolist()) == {0}
    # degenerate clock
    assert wc_recover_k_from_all(CutOracle(G), S, T, 10, rng, clock_factor=0) is FAIL


def test_wc_recover_matches_unclocked_run():
    G = generators.gnp(60, 0.3, np.random.default_rng(4))
    S, T = np.arange(0, 20), np.arange(20, 60)
    H = wc_recover_k_from_all(CutOracle(G), S, T, 10, np.random.default_rng(11))
    blk = CutOracle(G).bipartite_block(S, T)
    ref = recover_k_from_all(blk, 10, np.random.default_rng(11))
    got = [np.sort(H.dst[H.src == s]) for s in S]
    assert all(np.array_equal(a, np.sort(T[b])) for a, b in zip(got, ref.lists))


def test_wc_recover_checks_promised_degree(rng):
    G = generators.path(6)
    with pytest.raises(ContractViolation):
        wc_recover_k_from_all(CutOracle(G), [0, 2], [1, 3, 4], 10, rng, min_degree=2)


def test_wc_recover_keeps_contracting_goodness(rng):
    # the learned subgraph stays (alpha + 1/10, 10 beta)-good except with probability at most 1/10 + 200 beta / h
    from cutbench.contraction import goodness_report
    from cutbench.sparse_recovery import DirectedSubgraph
    from conftest import two_cliques
    G = two_cliques(60, 1)
    C = np.array([[0, 60]])
    h = 20
    failures = 0
    for _ in range(100):
        S = np.sort(rng.choice(120, 60, replace=False))
        T = np.setdiff1d(np.arange(120), S)
        inT = np.isin(np.arange(120), T)
        full = DirectedSubgraph.from_graph(G, vertices=S)
        full = DirectedSubgraph(120, full.src[inT[full.dst]], full.dst[inT[full.dst]])
        base = goodness_report(G, full, C)
        H = wc_recover_k_from_all(CutOracle(G), S, T, h, rng)
        assert H is not FAIL and np.all(H.out_degree()[S] >= h)
        learned = goodness_report(G, H, C)
        failures += not learned.is_good(base.max_q + 0.1, 10 * max(base.sum_q, 1e-12))
        assert base.sum_q <= 1 / 20
    assert failures / 100 <= 0.1 + 200 * (1 / 20) / h
