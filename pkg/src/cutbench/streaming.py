"""One-pass edge connectivity over vertex-arrival streams.

Every vertex arrives once with a list of neighbours. In the complete model the
list holds all neighbours; in the random and explicit models it holds only
neighbours that arrived earlier (random: the order is a uniform permutation).

The algorithms run one instance per minimum-degree estimate d = 2^l. An
instance holds r repetitions of star contraction, each maintaining 2d
least-index forests of the contracted graph seen so far. Memory is counted in
words: one per stored vertex id, two per stored edge. Instances are replayed
one after another over a buffered copy of the stream, and their per-event word
counts are summed as if they had run side by side.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import FAIL, ContractViolation, InvalidInput, StreamExhausted
from .graph_core import SimpleGraph, weighted_min_cut

MODELS = ("complete", "random", "explicit")


@dataclass(frozen=True)
class VertexArrivalEvent:
    vertex: int
    edges: tuple = ()

    def line(self) -> str:
        return f"V {self.vertex} : " + " ".join(map(str, self.edges))


def arrival_stream(G: SimpleGraph, model: str = "complete", rng=None, order=None) -> list[VertexArrivalEvent]:
    """Events for G. Random order unless `order` is given (explicit streams default to 0..n-1)."""
    if model not in MODELS:
        raise InvalidInput(f"unknown arrival model {model!r}")
    if order is None:
        order = np.arange(G.n) if model == "explicit" else np.random.default_rng(rng).permutation(G.n)
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (G.n,) or not np.array_equal(np.sort(order), np.arange(G.n)):
        raise InvalidInput("order must be a permutation of the vertices")
    pos = np.empty(G.n, dtype=np.int64)
    pos[order] = np.arange(G.n)
    events = []
    for v in order.tolist():
        nb = G.neighbors(v)
        if model != "complete":
            nb = nb[pos[nb] < pos[v]]
        events.append(VertexArrivalEvent(v, tuple(nb.tolist())))
    return events


def write_stream(events, path):
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.line() + "\n")


def read_stream(path) -> list[VertexArrivalEvent]:
    """Parse 'V u : v1 v2 ...' lines; blank lines and '#' comments are skipped."""
    events = []
    with open(path) as fh:
        for num, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            head, sep, tail = text.partition(":")
            parts = head.split()
            if not sep or len(parts) != 2 or parts[0] != "V":
                raise InvalidInput(f"line {num}: expected 'V u : v1 v2 ...'")
            try:
                events.append(VertexArrivalEvent(int(parts[1]), tuple(int(x) for x in tail.split())))
            except ValueError:
                raise InvalidInput(f"line {num}: vertex ids must be integers") from None
    return events


def _vertex_of(item) -> int:
    return item.vertex if isinstance(item, VertexArrivalEvent) else int(item)


def parallel_center_sampler(reader, n: int, p: float, r: int, rng):
    """r independent B([n], p) center sets drawn from a stream prefix.

    Sizes and fresh counts come from r offline draws; set i then reuses a
    uniform subset of the vertices read so far and reads its fresh vertices
    off the stream. Returns (sets, consumed) where `consumed` holds exactly
    the |union of sets| items read from `reader`.
    """
    if not 0 < p <= 1:
        raise InvalidInput(f"sampling probability {p} outside (0, 1]")
    if r < 1:
        raise InvalidInput("need at least one set")
    rng = np.random.default_rng(rng)
    reader = iter(reader)
    X = rng.random((r, n)) < p
    sizes = X.sum(axis=1)
    covered = np.zeros(n, dtype=bool)
    fresh = np.zeros(r, dtype=np.int64)
    for i in range(r):
        fresh[i] = np.count_nonzero(X[i] & ~covered)
        covered |= X[i]
    consumed, seen, sets = [], [], []
    for i in range(r):
        reused = rng.choice(np.asarray(seen, dtype=np.int64), sizes[i] - fresh[i], replace=False) \
            if sizes[i] > fresh[i] else np.zeros(0, dtype=np.int64)
        new = []
        for _ in range(fresh[i]):
            try:
                item = next(reader)
            except StopIteration:
                raise StreamExhausted(f"stream ended after {len(consumed)} vertices") from None
            consumed.append(item)
            new.append(_vertex_of(item))
        seen.extend(new)
        sets.append(np.sort(np.concatenate([reused, np.asarray(new, dtype=np.int64)])))
    return sets, consumed


@dataclass(frozen=True)
class StreamConfig:
    """center probability p = center_c * ln n / d (clamped to 1), r = ceil(repetitions_c * log2 n)
    repetitions per estimate, forest_factor * d forests, and an instance budget of
    budget_c * n * log2(n) ** e words split evenly over the repetitions, with
    e = budget_exp for complete arrivals and random_budget_exp for random ones.

    Random arrivals never contract the sampled prefix, which holds up to
    r * p * n vertices, hence the extra log factor."""
    preset: str = "desk"
    center_c: float = 3.0
    repetitions_c: float = 4.0
    forest_factor: int = 2
    budget_c: float = 128.0
    budget_exp: float = 2.0
    random_budget_exp: float = 3.0

    @classmethod
    def desk(cls, **overrides) -> "StreamConfig":
        return replace(cls(), **overrides)

    @classmethod
    def paper(cls, **overrides) -> "StreamConfig":
        return replace(cls(preset="paper", center_c=1200.0), **overrides)

    @classmethod
    def named(cls, name: str) -> "StreamConfig":
        if name not in ("desk", "paper"):
            raise InvalidInput(f"unknown preset {name!r}")
        return cls.desk() if name == "desk" else cls.paper()

    def constants(self) -> dict:
        return asdict(self)

    def center_probability(self, n: int, d: int) -> float:
        return min(1.0, self.center_c * math.log(n) / d)

    def repetitions(self, n: int) -> int:
        return max(1, math.ceil(self.repetitions_c * math.log2(n)))

    def budget(self, n: int, model: str = "complete") -> int:
        exp = self.budget_exp if model == "complete" else self.random_budget_exp
        return int(self.budget_c * n * math.log2(n) ** exp)


@dataclass
class StreamOutcome:
    value: object
    delta: int
    estimate: int | None
    lambdas: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    contracted_sizes: list = field(default_factory=list)
    center_union: int = 0
    instance_peaks: dict = field(default_factory=dict)
    parallel_peak: int = 0
    budget: int = 0

    @property
    def failed(self) -> bool:
        return self.value is FAIL


STATUS = {0: "ok", 1: "centerless", 2: "budget"}


class _Replay:
    """The buffered stream as flat arrays, validated against its arrival model."""

    def __init__(self, events, model: str):
        self.events = list(events)
        n = len(self.events)
        if n < 2:
            raise InvalidInput("need at least two vertices")
        self.n = n
        self.order = np.array([ev.vertex for ev in self.events], dtype=np.int64)
        if not np.array_equal(np.sort(self.order), np.arange(n)):
            raise InvalidInput("every vertex 0..n-1 must arrive exactly once")
        lens = np.array([len(ev.edges) for ev in self.events], dtype=np.int64)
        self.ptr = np.concatenate([[0], np.cumsum(lens)])
        self.nbrs = np.fromiter((u for ev in self.events for u in ev.edges), dtype=np.int64,
                                count=int(self.ptr[-1]))
        owner = np.repeat(self.order, lens)
        if self.nbrs.size and (self.nbrs.min() < 0 or self.nbrs.max() >= n or np.any(self.nbrs == owner)):
            raise InvalidInput("neighbour ids must be other vertices in 0..n-1")
        if model == "complete":
            fwd = np.sort(owner * n + self.nbrs)
            if np.any(fwd[1:] == fwd[:-1]) or not np.array_equal(fwd, np.sort(self.nbrs * n + owner)):
                raise InvalidInput("complete-arrival lists must be symmetric and duplicate-free")
            self.degrees = np.bincount(self.order, weights=lens, minlength=n).astype(np.int64)
        else:
            pos = np.empty(n, dtype=np.int64)
            pos[self.order] = np.arange(n)
            if np.any(pos[self.nbrs] >= pos[owner]):
                raise InvalidInput("arrival lists may only name earlier vertices")
            key = np.sort(np.minimum(owner, self.nbrs) * n + np.maximum(owner, self.nbrs))
            if np.any(key[1:] == key[:-1]):
                raise InvalidInput("duplicate edge in stream")
            self.degrees = np.bincount(np.concatenate([owner, self.nbrs]), minlength=n).astype(np.int64)


def _certificate_lambda(n, rel, eu, ev) -> tuple[float, int]:
    nodes = np.unique(rel)
    if nodes.size < 2:
        return math.inf, int(nodes.size)
    lookup = np.full(n, -1, dtype=np.int64)
    lookup[nodes] = np.arange(nodes.size)
    value, _ = weighted_min_cut(nodes.size, lookup[eu], lookup[ev], np.ones(eu.size, dtype=np.int64))
    return value, int(nodes.size)


def _run_instance(replay: _Replay, d: int, cfg: StreamConfig, rng, model: str, finish: bool):
    """One estimate: r repetitions over the replayed stream. The end-of-stream
    min cuts are only computed when `finish` is set, since only the estimate
    matching the final minimum degree is ever reported."""
    n = replay.n
    p = cfg.center_probability(n, d)
    r = cfg.repetitions(n)
    per_rep = cfg.budget(n, model) // r
    if model == "complete":
        center_sets = [np.flatnonzero(rng.random(n) < p) for _ in range(r)]
        union = None
    else:
        center_sets, prefix = parallel_center_sampler(replay.events, n, p, r, rng)
        union = np.zeros(n, dtype=bool)
        union[[ev.vertex for ev in prefix]] = True
    out = {"lambdas": [], "statuses": [], "sizes": [], "trace": np.zeros(n, dtype=np.int64),
           "center_union": int(union.sum()) if union is not None else 0}
    copies = 1
    if p >= 1:
        # every vertex is a center: the repetitions are identical, run one and count it r times
        center_sets, copies = center_sets[:1], r
    for R in center_sets:
        center = np.zeros(n, dtype=bool)
        center[R] = True
        protected = center if union is None else union
        coins = rng.random(n)
        status, _, eu, ev, _, rel, trace = _kernels.stream_repetition(
            replay.order, replay.ptr, replay.nbrs, protected, center, coins,
            cfg.forest_factor * d, per_rep, True, n)
        out["trace"] += copies * trace
        out["statuses"] += [STATUS[status]] * copies
        if status or not finish:
            out["lambdas"] += [math.inf] * copies
            out["sizes"] += [None] * copies
            continue
        value, size = _certificate_lambda(n, rel, eu, ev)
        out["lambdas"] += [value] * copies
        out["sizes"] += [size] * copies
    return out


def _stream_ec(events, cfg, rng, model) -> StreamOutcome:
    cfg = cfg or StreamConfig.desk()
    rng = np.random.default_rng(rng)
    replay = _Replay(events, model)
    n = replay.n
    delta = int(replay.degrees.min())
    budget = cfg.budget(n, model)
    # degree counters are shared by all instances
    total = np.full(n, n, dtype=np.int64)
    peaks, chosen = {}, None
    for ell in range(math.ceil(math.log2(n))):
        d = 1 << ell
        match = delta >= 1 and d <= delta < 2 * d
        inst = _run_instance(replay, d, cfg, rng, model, finish=match)
        peak = int(inst["trace"].max())
        if peak > budget:
            raise ContractViolation(f"instance d={d} used {peak} words over budget {budget}")
        peaks[d] = peak
        total += inst["trace"]
        if match:
            chosen = (d, inst)
    out = StreamOutcome(FAIL, delta, None, instance_peaks=peaks, parallel_peak=int(total.max()), budget=budget)
    if delta == 0:
        out.value = 0
        return out
    d, inst = chosen
    out.estimate = d
    out.lambdas, out.statuses = inst["lambdas"], inst["statuses"]
    out.contracted_sizes, out.center_union = inst["sizes"], inst["center_union"]
    if all(s != "ok" for s in inst["statuses"]):
        return out
    out.value = int(min(delta, min(inst["lambdas"])))
    return out


def stream_ec_complete(events, cfg: StreamConfig | None = None, rng=None) -> StreamOutcome:
    """Edge connectivity from a complete vertex-arrival stream (centers drawn before the pass)."""
    return _stream_ec(events, cfg, rng, "complete")


def stream_ec_random(events, cfg: StreamConfig | None = None, rng=None) -> StreamOutcome:
    """Edge connectivity from a random-order stream; centers come from the stream prefix
    via parallel_center_sampler and the prefix vertices are never contracted."""
    return _stream_ec(events, cfg, rng, "random")
