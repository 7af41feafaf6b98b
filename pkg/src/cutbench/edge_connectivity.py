"""End-to-end edge connectivity pipelines and Monte Carlo amplification.

Four algorithms share one output contract: a value that is never below the
true edge connectivity, or FAIL.

* ec_loglog: degree pass, center sampling, WC-recover of center neighbours,
  1-out contraction, then a certificate (or the modeled cut-query min-cut
  solver when the minimum degree is large).
* ec_linear: as ec_loglog, plus a 2-out contraction inside the center set so
  the certificate step only sees a few supervertices.
* ec_mdcp: minimum degree / neighbourhood / spanning forest / cut primitives.
* ec_sequential: explicit graph, star contraction + forest certificate.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .contraction import (contract_edges, explicit_star_contraction, goodness_report, learn_subgraph,
                          one_out_sample, sample_centers, two_out_sample, uniform_star_contraction)
from .cut_oracle import CUT_CATEGORIES, MDCP_CATEGORIES, CutOracle, MdcpOracle
from .errors import FAIL, AmplificationExhausted, InvalidInput
from .forest_cert import certificate_mc, certificate_min_cut
from .graph_core import SimpleGraph, ni_certificate_explicit, weighted_min_cut
from .sparse_recovery import wc_recover_k_from_all


@dataclass(frozen=True)
class EcConfig:
    """Constants of the pipelines. `log` is base 2, `ln` natural.

    center probability       p = center_c * log d / d
    FAIL on |R|              >= center_fail_c * n * log d / d
    low center degree        d_R(v) <= low_dr_c * log d, at most n / (low_count_c * d) allowed
    learn_subgraph degree    h = max(h_min, ceil(h_c * log d))
    certificate branch       d <= log(n) ** high_degree_exp
    MDCP                     p = mdcp_c * ln n / delta, ceil(mdcp_rounds_c * log n) rounds,
                             abort above mdcp_abort_c * n * ln n / delta centers or blocks
    """
    preset: str = "desk"
    small_degree_cutoff: float = 16
    center_c: float = 4.0
    center_fail_c: float = 12.0
    low_dr_c: float = 1.0
    low_count_c: float = 1.0
    recover_k: int = 10
    h_c: float = 1.0
    h_min: int = 4
    high_degree_exp: float = 3.0
    cert_eps: float = -1.0
    clock_factor: float = 100.0
    mdcp_c: float = 4.0
    mdcp_rounds_c: float = 1.0
    mdcp_abort_c: float = 8.0
    seq_c: float = 4.0
    seq_repetitions: int = 3

    @classmethod
    def desk(cls, **overrides) -> "EcConfig":
        return replace(cls(), **overrides)

    @classmethod
    def paper(cls, **overrides) -> "EcConfig":
        base = cls(preset="paper", small_degree_cutoff=5e6, center_c=1e5, center_fail_c=3e5,
                   low_dr_c=5e4, low_count_c=1e3, recover_k=5000, h_c=5e4, h_min=0,
                   high_degree_exp=10.0, cert_eps=0.5, mdcp_c=1200.0, mdcp_rounds_c=100.0,
                   mdcp_abort_c=2400.0, seq_c=1200.0)
        return replace(base, **overrides)

    @classmethod
    def named(cls, name: str) -> "EcConfig":
        if name == "desk":
            return cls.desk()
        if name == "paper":
            return cls.paper()
        raise InvalidInput(f"unknown preset {name!r}")

    def constants(self) -> dict:
        return asdict(self)

    def provenance(self) -> dict:
        """'paper' for constants taken over verbatim, 'desk' for scaled-down ones."""
        ref = EcConfig.paper()
        out = {}
        for f in fields(self):
            if f.name == "preset":
                continue
            verbatim = f.name not in _CHOSEN_HERE and getattr(self, f.name) == getattr(ref, f.name)
            out[f.name] = "paper" if verbatim else "desk"
        return out

    def center_probability(self, d: int) -> float:
        return _clamped(self.center_c * math.log2(d) / d, "center")

    def h(self, d: int) -> int:
        return max(int(self.h_min), math.ceil(self.h_c * math.log2(max(d, 2))))

    def high_degree(self, n: int) -> float:
        return math.log2(max(n, 2)) ** self.high_degree_exp

    def mdcp_probability(self, n: int, delta: int) -> float:
        return _clamped(self.mdcp_c * math.log(n) / delta, "MDCP center")

    def mdcp_rounds(self, n: int) -> int:
        return max(1, math.ceil(self.mdcp_rounds_c * math.log2(n)))

    def mdcp_abort(self, n: int, delta: int) -> float:
        return self.mdcp_abort_c * n * math.log(n) / delta


# the clock factor and repetition count are left open by the algorithms
_CHOSEN_HERE = {"clock_factor", "seq_repetitions"}


def _clamped(p: float, what: str) -> float:
    if p > 1:
        # constant text, so the default filter reports each call site once
        warnings.warn(f"{what} probability above 1 clamped to 1", RuntimeWarning, stacklevel=3)
        return 1.0
    return p


@dataclass
class EcOutcome:
    value: object
    branch: str
    ledger: dict
    stats: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.value is FAIL

    @property
    def cut_units(self) -> int:
        return sum(self.ledger[c][1] for c in CUT_CATEGORIES)

    @property
    def mdcp_units(self) -> int:
        return sum(self.ledger[c][1] for c in MDCP_CATEGORIES)

    @property
    def modeled_units(self) -> int:
        return self.ledger["modeled"][1]


def _outcome(oracle, value, branch, stats):
    if value is not FAIL:
        value = int(value)
    return EcOutcome(value, branch, oracle.ledger.snapshot(), stats)


def _check_oracle(oracle):
    if oracle.n < 2:
        raise InvalidInput("edge connectivity needs at least two vertices")


# ---------------------------------------------------------------------------
# cut-query pipelines

def _small_degree(oracle: CutOracle, d: int, cfg: EcConfig, rng, stats):
    if d == 0:
        return _outcome(oracle, 0, "isolated", stats)
    info = {}
    cert = certificate_mc(oracle, None, d, rng, clock_factor=cfg.clock_factor, eps=cfg.cert_eps, info=info)
    stats["certificate_path"] = info.get("path")
    if cert is FAIL:
        return _outcome(oracle, FAIL, "small-degree", stats)
    value, _ = certificate_min_cut(cert)
    return _outcome(oracle, min(value, d), "small-degree", stats)


def _centers_and_stars(oracle: CutOracle, d: int, cfg: EcConfig, rng, stats):
    """Center sampling, FAIL checks and WC-recover of A(S, R). Returns (R, H') or FAIL."""
    n = oracle.n
    logd = math.log2(d)
    R = sample_centers(n, cfg.center_probability(d), rng)
    dR = oracle.cross_each(np.arange(n), R, exclude_self=True)
    low = dR <= cfg.low_dr_c * logd
    stats["centers"] = int(R.size)
    stats["low_center_degree"] = int(low.sum())
    if R.size >= cfg.center_fail_c * n * logd / d or low.sum() > n / (cfg.low_count_c * d):
        stats["fail_at"] = "center-check"
        return FAIL
    inR = np.zeros(n, dtype=bool)
    inR[R] = True
    S = np.flatnonzero(~inR & ~low)
    stats["stars"] = int(S.size)
    H1 = wc_recover_k_from_all(oracle, S, R, cfg.recover_k, rng, clock_factor=cfg.clock_factor,
                               degrees=dR[S])
    if H1 is FAIL:
        stats["fail_at"] = "recover"
        return FAIL
    return R, H1


def _goodness(truth, H, stats, key):
    if truth is None:
        return
    G, side = truth
    side = np.asarray(side, dtype=bool)
    e = G.edges()
    C = e[side[e[:, 0]] != side[e[:, 1]]]
    rep = goodness_report(G, H, C)
    stats[key] = (rep.max_q, rep.sum_q)


def _finish(oracle: CutOracle, partition, d: int, cfg: EcConfig, rng, stats, branch):
    """Min cut of the contraction (certificate or modeled solver), then min{d, cut(W)}."""
    labels = partition.labels()
    q = int(labels.max()) + 1
    stats["blocks"] = q
    if q < 2:
        return _outcome(oracle, d, branch, stats)
    if d <= cfg.high_degree(oracle.n):
        info = {}
        cert = certificate_mc(oracle, labels, d, rng, clock_factor=cfg.clock_factor, eps=cfg.cert_eps,
                              info=info)
        stats["certificate_path"] = info.get("path")
        if cert is FAIL:
            stats["fail_at"] = "certificate"
            return _outcome(oracle, FAIL, branch, stats)
        _, W = certificate_min_cut(cert)
    else:
        branch += "+modeled"
        _, W = oracle.modeled_min_cut(labels)
    if not W.any() or W.all():
        return _outcome(oracle, d, branch, stats)
    return _outcome(oracle, min(d, oracle.cut(W)), branch, stats)


def ec_loglog(oracle: CutOracle, cfg: EcConfig | None = None, rng=None, truth=None) -> EcOutcome:
    """Edge connectivity with O(n log log n) cut queries in expectation; FAIL allowed.

    `truth` = (G, side of a minimum cut) adds goodness statistics for the
    recovered star graph; it does not influence the run.
    """
    cfg = cfg or EcConfig.desk()
    rng = np.random.default_rng(rng)
    _check_oracle(oracle)
    d = int(oracle.degrees_by_cut().min())
    return _loglog_after_degree(oracle, d, cfg, rng, truth, {"delta": d})


def _loglog_after_degree(oracle, d, cfg, rng, truth, stats):
    if d < cfg.small_degree_cutoff:
        return _small_degree(oracle, d, cfg, rng, stats)
    got = _centers_and_stars(oracle, d, cfg, rng, stats)
    if got is FAIL:
        return _outcome(oracle, FAIL, "main", stats)
    R, H1 = got
    _goodness(truth, H1, stats, "goodness_stars")
    partition = contract_edges(oracle.n, one_out_sample(H1, rng))
    return _finish(oracle, partition, d, cfg, rng, stats, "main")


def ec_linear(oracle: CutOracle, cfg: EcConfig | None = None, rng=None, truth=None) -> EcOutcome:
    """Edge connectivity with O(n) cut queries in expectation; FAIL allowed.

    Large minimum degree (above log(n)**high_degree_exp) is handed to the
    ec_loglog route, which is already linear there.
    """
    cfg = cfg or EcConfig.desk()
    rng = np.random.default_rng(rng)
    _check_oracle(oracle)
    n = oracle.n
    d = int(oracle.degrees_by_cut().min())
    stats = {"delta": d}
    if d > cfg.high_degree(n):
        stats["dispatched"] = "loglog"
        return _loglog_after_degree(oracle, d, cfg, rng, truth, stats)
    if d < cfg.small_degree_cutoff:
        return _small_degree(oracle, d, cfg, rng, stats)
    got = _centers_and_stars(oracle, d, cfg, rng, stats)
    if got is FAIL:
        return _outcome(oracle, FAIL, "main", stats)
    R, H1 = got
    h = cfg.h(d)
    tau = n / (cfg.low_count_c * d)
    info = {}
    H2 = learn_subgraph(oracle, R, h, rng, tau=tau, clock_factor=cfg.clock_factor, info=info)
    stats["h"] = h
    stats["subgraph_missing"] = info.get("missing")
    if H2 is FAIL:
        stats["fail_at"] = "learn-subgraph"
        return _outcome(oracle, FAIL, "main", stats)
    _goodness(truth, H1, stats, "goodness_stars")
    _goodness(truth, H2, stats, "goodness_centers")
    X = np.concatenate([one_out_sample(H1, rng), two_out_sample(H2, rng)])
    partition = contract_edges(n, X)
    blocks = partition.blocks
    stats["block_bound"] = tau + 3 * R.size / h
    if blocks > stats["block_bound"]:
        stats["blocks"] = blocks
        stats["fail_at"] = "too-many-blocks"
        return _outcome(oracle, FAIL, "main", stats)
    return _finish(oracle, partition, d, cfg, rng, stats, "main")


# ---------------------------------------------------------------------------
# MDCP

def _forest_min_cut(n: int, edges) -> int:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    value, _ = weighted_min_cut(n, e[:, 0], e[:, 1], np.ones(len(e), dtype=np.int64))
    return value


def ec_mdcp(oracle: MdcpOracle, cfg: EcConfig | None = None, rng=None) -> EcOutcome:
    """Edge connectivity from MDCP primitives.

    Small minimum degree: a ceil(sqrt n) forest certificate from repeated
    spanning forest queries. Otherwise repeated uniform star contraction, each
    round solved by the modeled cut-query min-cut solver. An abort inside a
    round only discards that round.
    """
    cfg = cfg or EcConfig.desk()
    rng = np.random.default_rng(rng)
    _check_oracle(oracle)
    n = oracle.n
    delta = oracle.mindeg()
    stats = {"delta": delta}
    if delta < math.sqrt(n):
        removed = np.zeros((0, 2), dtype=np.int64)
        passes = 0
        for _ in range(math.ceil(math.sqrt(n))):
            forest = oracle.spf(removed)
            passes += 1
            if len(forest) == 0:
                break  # every later forest is empty too
            removed = np.concatenate([removed, forest])
        stats["forests"] = passes
        return _outcome(oracle, _forest_min_cut(n, removed), "sqrt-certificate", stats)
    p = cfg.mdcp_probability(n, delta)
    limit = cfg.mdcp_abort(n, delta)
    best = math.inf
    aborted = 0
    rounds = cfg.mdcp_rounds(n)
    for _ in range(rounds):
        R = sample_centers(n, p, rng)
        if R.size > limit:
            aborted += 1
            continue
        partition, _ = uniform_star_contraction(oracle, p, rng, centers=R)
        labels = partition.labels()
        if labels.max() + 1 > limit:
            aborted += 1
            continue
        value, _ = oracle.modeled_min_cut(labels)
        best = min(best, value)
    stats.update(rounds=rounds, aborted=aborted)
    return _outcome(oracle, min(delta, best), "star-rounds", stats)


# ---------------------------------------------------------------------------
# explicit graph

def ec_sequential(G: SimpleGraph, cfg: EcConfig | None = None, rng=None) -> int:
    """Star contraction + forest certificate on an explicit graph, best of a few repetitions."""
    cfg = cfg or EcConfig.desk()
    rng = np.random.default_rng(rng)
    if G.n < 2:
        raise InvalidInput("edge connectivity needs at least two vertices")
    delta = int(G.degrees.min())
    if delta == 0:
        return 0
    p = _clamped(cfg.seq_c * math.log(G.n) / delta, "star contraction")
    best = delta
    for _ in range(cfg.seq_repetitions):
        partition, _ = explicit_star_contraction(G, p, rng)
        if partition.blocks < 2:
            continue
        value, _ = certificate_min_cut(ni_certificate_explicit(G, delta, partition))
        best = min(best, value)
    return int(best)


# ---------------------------------------------------------------------------

def ec_amplified(runner, trials: int):
    """Minimum over the non-FAIL results of `trials` calls of runner().

    runner may return an int, FAIL or an EcOutcome.
    """
    if trials < 1:
        raise InvalidInput("trials must be positive")
    best = None
    for _ in range(trials):
        got = runner()
        value = got.value if isinstance(got, EcOutcome) else got
        if value is FAIL:
            continue
        best = value if best is None else min(best, value)
    if best is None:
        raise AmplificationExhausted(f"all {trials} trials returned FAIL")
    return best
