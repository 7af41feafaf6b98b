import math

import numpy as np
import pytest
from scipy.stats import chisquare

from cutbench import generators
from cutbench.contraction import (
    DirectedSubgraph,
    contract_edges,
    explicit_star_contraction,
    goodness_report,
    learn_subgraph,
    miss_probability_bound,
    one_out_sample,
    sample_centers,
    two_out_sample,
    uniform_star_contraction,
)
from cutbench.cut_oracle import CutOracle, MdcpOracle
from cutbench.errors import FAIL, InvalidInput
from cutbench.graph_core import SimpleGraph, contracted_min_cut, exact_min_cut

from conftest import components


def cycle_cut(n):
    """Cycle C_n with the cut separating {0..n/2-1}: edges (n/2-1, n/2) and (0, n-1)."""
    half = n // 2
    return generators.cycle(n), np.array([[half - 1, half], [0, n - 1]])


def test_sample_centers_examples(rng):
    assert np.array_equal(sample_centers(10, 1.0, rng), np.arange(10))
    with pytest.raises(InvalidInput):
        sample_centers(10, 0.0, rng)
    with pytest.raises(InvalidInput):
        sample_centers(10, 1.5, rng)


def test_sample_centers_size(rng):
    n, p = 10_000, 0.5
    sizes = np.array([sample_centers(n, p, rng).size for _ in range(1000)])
    sigma = math.sqrt(n * p * (1 - p) / 1000)
    assert abs(sizes.mean() - n * p) <= 3 * sigma
    # Pr[|R| >= 2pn] <= exp(-pn/3); at these sizes it never happens
    assert np.count_nonzero(sizes >= 2 * p * n) / sizes.size <= math.exp(-p * n / 3) + 1e-12
    small = np.array([sample_centers(60, 0.1, rng).size for _ in range(2000)])
    assert np.mean(small >= 12) <= math.exp(-6 / 3) + 0.02


def test_star_contraction_examples(rng):
    G = generators.gnp(30, 0.3, rng, with_cycle=True)
    part, sample = uniform_star_contraction(CutOracle(G), 1.0, rng)
    assert part.blocks == 30 and sample.star_edges.size == 0
    part, sample = uniform_star_contraction(CutOracle(generators.complete(12)), 0.5, rng, centers=[4])
    assert part.blocks == 1


@pytest.mark.parametrize("kind", ["cut", "mdcp", "explicit"])
def test_star_contraction_structure(kind, rng):
    for trial in range(60):
        G = generators.cycle(6) if trial % 2 else generators.gnp(40, 0.15, rng)
        if kind == "cut":
            part, s = uniform_star_contraction(CutOracle(G), 0.3, rng)
        elif kind == "mdcp":
            part, s = uniform_star_contraction(MdcpOracle(G), 0.3, rng)
        else:
            part, s = explicit_star_contraction(G, 0.3, rng)
        assert part.blocks <= s.block_bound()
        inR = np.zeros(G.n, dtype=bool)
        inR[s.centers] = True
        if s.star_edges.size:
            assert G.has_edges(s.star_edges).all()
            assert np.all(inR[s.star_edges[:, 0]] ^ inR[s.star_edges[:, 1]])
            outside = np.where(inR[s.star_edges[:, 0]], s.star_edges[:, 1], s.star_edges[:, 0])
            assert np.unique(outside).size == outside.size
        for v in s.left_out:
            assert not inR[G.neighbors(v)].any()


def test_star_choice_is_uniform(rng):
    # vertex 0 adjacent to centers 1..5; its contracted partner should be uniform
    G = SimpleGraph.from_edges(6, [(0, i) for i in range(1, 6)])
    R = np.arange(1, 6)
    counts = np.zeros(6, dtype=int)
    for kind in ("cut", "explicit"):
        counts[:] = 0
        for _ in range(5000):
            if kind == "cut":
                _, s = uniform_star_contraction(CutOracle(G), 1.0, rng, centers=R)
            else:
                _, s = explicit_star_contraction(G, 1.0, rng, centers=R)
            counts[s.star_edges[0, 1]] += 1
        assert chisquare(counts[1:]).pvalue > 0.01


def test_one_out_examples(rng):
    H = DirectedSubgraph(4, np.array([0, 1, 2, 3]), np.array([1, 2, 3, 0]))
    assert sorted(map(tuple, one_out_sample(H, rng).tolist())) == [(0, 1), (0, 3), (1, 2), (2, 3)]
    assert one_out_sample(DirectedSubgraph.empty(5), rng).shape == (0, 2)


def test_one_out_is_uniform_per_arc(rng):
    G = generators.complete(5)
    H = DirectedSubgraph.from_graph(G, vertices=[0])
    counts = {}
    for _ in range(100_000 // 20):
        for _ in range(20):
            (a, b), = one_out_sample(H, rng).tolist()
            counts[b] = counts.get(b, 0) + 1
    assert sorted(counts) == [1, 2, 3, 4]
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_two_out_examples(rng):
    H = DirectedSubgraph(3, np.array([0, 1, 2]), np.array([1, 2, 0]))
    assert len(two_out_sample(H, rng)) == 3
    n = 64
    Cn = generators.cycle(n)
    X = two_out_sample(DirectedSubgraph.from_graph(Cn), rng)
    assert components(n, X) <= 2 + 2 * n / 2


def clique_blocks(n, ell, tau, rng):
    """Disjoint (ell+1)-cliques on a random labelling, tau vertices left with no out-arcs."""
    perm = rng.permutation(n)
    src, dst = [], []
    size = ell + 1
    for start in range(0, n - size + 1, size):
        block = perm[start:start + size]
        for u in block:
            for v in block:
                if u != v:
                    src.append(u)
                    dst.append(v)
    src, dst = np.array(src), np.array(dst)
    silent = rng.choice(n, tau, replace=False)
    keep = ~np.isin(src, silent)
    return DirectedSubgraph(n, src[keep], dst[keep])


@pytest.mark.parametrize("ell", [8, 16, 32])
def test_two_out_component_bound(ell, rng):
    n, tau = 1024, 20
    ok = 0
    for _ in range(100):
        H = clique_blocks(n, ell, tau, rng)
        ok += components(n, two_out_sample(H, rng)) <= tau + 2 * n / ell
    assert ok >= 95


def test_goodness_examples():
    G = generators.cycle(6)
    H = DirectedSubgraph.from_graph(G)
    C = np.array([[2, 3], [0, 5]])
    rep = goodness_report(G, H, C)
    assert np.allclose(rep.q, [0.5, 0, 0.5, 0.5, 0, 0.5])
    assert rep.max_q == 0.5 and rep.sum_q == 2.0 and rep.is_good(0.5, 2)
    empty = goodness_report(G, H, np.zeros((0, 2)))
    assert empty.max_q == 0 and empty.sum_q == 0
    after = goodness_report(G, H.without_out_arcs(2), C)
    assert after.q[2] == 0 and np.allclose(np.delete(after.q, 2), np.delete(rep.q, 2))
    with pytest.raises(InvalidInput):
        goodness_report(G, H, [[0, 2]])


def test_goodness_csv(tmp_path):
    G, C = cycle_cut(6)
    goodness_report(G, DirectedSubgraph.from_graph(G), C).to_csv(tmp_path / "q.csv")
    lines = (tmp_path / "q.csv").read_text().splitlines()
    assert lines[0] == "vertex,q_u" and len(lines) == 7


def test_miss_probability_examples():
    assert miss_probability_bound(0.5, 2) == 1 / 16
    assert math.isclose(miss_probability_bound(2 / 3, 8), (1 / 3) ** 12)
    assert math.isclose(miss_probability_bound(0.3, 0.2), 0.7)
    assert miss_probability_bound(0.3, 0.3) == pytest.approx(0.7)
    with pytest.raises(InvalidInput):
        miss_probability_bound(1.0, 2)


def test_cycle_one_out_avoids_cut_one_in_sixteen(rng):
    G, C = cycle_cut(20)
    H = DirectedSubgraph.from_graph(G)
    rep = goodness_report(G, H, C)
    assert rep.avoid_probability() == 1 / 16
    keys = {tuple(e) for e in C.tolist()}
    trials = 20_000
    avoid = sum(not any(tuple(e) in keys for e in one_out_sample(H, rng).tolist()) for _ in range(trials))
    assert abs(avoid / trials - 1 / 16) <= 0.01


def test_one_out_miss_probability_on_good_graphs(rng):
    for _ in range(5):
        G = generators.planted_cut(10, 14, 3, 0.5, rng)
        w = exact_min_cut(G)
        e = G.edges()
        C = e[w.side[e[:, 0]] != w.side[e[:, 1]]]
        H = DirectedSubgraph.from_graph(G)
        rep = goodness_report(G, H, C)
        bound = miss_probability_bound(rep.max_q, max(rep.sum_q, rep.max_q))
        keys = {tuple(x) for x in C.tolist()}
        trials = 5000
        avoid = sum(not any(tuple(x) in keys for x in one_out_sample(H, rng).tolist()) for _ in range(trials))
        sigma = math.sqrt(bound * (1 - bound) / trials)
        assert avoid / trials >= bound - 3 * sigma - 1e-9
        assert abs(avoid / trials - rep.avoid_probability()) <= 4 * math.sqrt(0.25 / trials)


def test_contraction_avoiding_cut_preserves_it(rng):
    for _ in range(30):
        G = generators.planted_cut(20, 24, 3, 0.6, rng)
        w = exact_min_cut(G)
        e = G.edges()
        C = {tuple(x) for x in e[w.side[e[:, 0]] != w.side[e[:, 1]]].tolist()}
        part, s = explicit_star_contraction(G, 0.4, rng)
        X = {tuple(sorted(x)) for x in s.star_edges.tolist()}
        if part.blocks >= 2 and not X & C:
            assert contracted_min_cut(G, part.labels()).value == len(C)


def test_center_count_regime(rng):
    # |R| < 2pn in at least 2/3 of trials with p = 4 log2(d) / d
    hits = 0
    for _ in range(30):
        G = generators.near_regular(400, 40, rng)
        d = int(G.degrees.min())
        p = min(1.0, 4 * math.log2(d) / d)
        hits += sample_centers(G.n, p, rng).size < 2 * p * G.n
    assert hits >= 20


def test_learn_subgraph_on_clique(rng):
    h = 8
    W = np.arange(4 * h)
    G = generators.complete(4 * h + 5)
    H = learn_subgraph(CutOracle(G), W, h, rng)
    assert H is not FAIL and H.check(G)
    assert np.all(np.isin(H.src, W)) and np.all(np.isin(H.dst, W))
    assert np.all(H.out_degree()[W] >= h)


def test_learn_subgraph_vacuous_threshold(rng):
    G = generators.cycle(40)
    info = {}
    H = learn_subgraph(CutOracle(G), np.arange(40), 5, rng, tau=40, info=info)
    assert H is not FAIL and info["missing"] == 40
    assert learn_subgraph(CutOracle(G), np.arange(40), 5, rng, tau=0) is FAIL


def test_learn_subgraph_excludes_isolated_vertex(rng):
    h = 4
    G = generators.complete(12)
    G = SimpleGraph.from_edges(13, G.edges())  # vertex 12 has no edges
    W = np.arange(13)
    side = np.arange(13) % 2 == 0
    info = {}
    H = learn_subgraph(CutOracle(G), W, h, rng, tau=1, bipartition=side, info=info)
    assert H is not FAIL and info["missing"] == 1
    assert H.out_degree()[12] == 0
    assert np.all(H.out_degree()[:12] >= h)


def test_contract_edges_blocks(rng):
    G = generators.gnp(50, 0.1, rng)
    F = G.edges()[::2]
    assert contract_edges(50, F).blocks == components(50, F)
