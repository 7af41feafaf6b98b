"""Experiment specs, trial runners, CSV reports and verification.

Seeding: trial i of grid point j uses the integer
SeedSequence(master, spawn_key=(j, i)).generate_state(1, uint64)[0] >> 1, which is
written to the `seed` column. From that integer, SeedSequence(seed).spawn(2)
gives the graph stream and the algorithm stream, so any row can be rerun alone
with `trial_seed` + `run_trial`.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import generators
from .cut_oracle import CutOracle, MdcpOracle
from .edge_connectivity import EcConfig, EcOutcome, ec_amplified, ec_linear, ec_loglog, ec_mdcp, ec_sequential
from .errors import FAIL, AmplificationExhausted, InvalidInput
from .forest_cert import boruvka_spanning_forest
from .graph_core import SimpleGraph, exact_min_cut
from .streaming import StreamConfig, arrival_stream, stream_ec_complete, stream_ec_random

COLUMNS = ("algorithm", "preset", "n", "m", "delta", "lambda_true", "value", "fail", "branch",
           "cut_units", "modeled_units", "seed")


def trial_seed(master: int, grid_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=(grid_index, trial))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _streams(seed: int):
    g, a = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(g), np.random.default_rng(a)


# ---------------------------------------------------------------------------
# algorithms: each maps (G, preset, rng) to a partial row

def _ledger_row(outcome: EcOutcome, ledger_total: int):
    units = sum(u for c, (_, u) in outcome.ledger.items() if c != "modeled")
    assert units + outcome.modeled_units == ledger_total
    return {"value": outcome.value, "branch": outcome.branch,
            "cut_units": units, "modeled_units": outcome.modeled_units}


def _cut_pipeline(fn, oracle_type):
    def run(G, preset, rng):
        oracle = oracle_type(G)
        return _ledger_row(fn(oracle, EcConfig.named(preset), rng), oracle.ledger.total)
    return run


def _sequential(G, preset, rng):
    return {"value": ec_sequential(G, EcConfig.named(preset), rng), "branch": "explicit",
            "cut_units": 0, "modeled_units": 0}


def _stream(fn, model):
    def run(G, preset, rng):
        out = fn(arrival_stream(G, model, rng), StreamConfig.named(preset), rng)
        return {"value": out.value, "branch": f"d={out.estimate}", "cut_units": 0, "modeled_units": 0}
    return run


def _forest(G, preset, rng):
    # value: forest size; its exact counterpart is n minus the number of components
    oracle = CutOracle(G)
    F = boruvka_spanning_forest(oracle, rng)
    return {"value": len(F), "branch": "boruvka", "cut_units": oracle.ledger.query_units,
            "modeled_units": oracle.ledger.modeled_units}


ALGORITHMS = {
    "ec_linear": _cut_pipeline(ec_linear, CutOracle),
    "ec_loglog": _cut_pipeline(ec_loglog, CutOracle),
    "ec_mdcp": _cut_pipeline(ec_mdcp, MdcpOracle),
    "ec_sequential": _sequential,
    "stream_complete": _stream(stream_ec_complete, "complete"),
    "stream_random": _stream(stream_ec_random, "random"),
    "boruvka_forest": _forest,
}


def exact_value(algorithm: str, G: SimpleGraph) -> int:
    if algorithm == "boruvka_forest":
        from scipy.sparse.csgraph import connected_components
        return G.n - connected_components(G.matrix(), directed=False)[0]
    return exact_min_cut(G).value


def run_amplified(algorithm: str, G: SimpleGraph, preset: str, rng, trials: int) -> dict:
    """Minimum over `trials` runs; units are summed over all of them."""
    runner = ALGORITHMS[algorithm]
    total = {"cut_units": 0, "modeled_units": 0}

    def once():
        row = runner(G, preset, rng)
        total["cut_units"] += row["cut_units"]
        total["modeled_units"] += row["modeled_units"]
        return row["value"]

    try:
        value = ec_amplified(once, trials)
    except AmplificationExhausted:
        value = FAIL
    return {"value": value, "branch": f"amplified x{trials}", **total}


# ---------------------------------------------------------------------------
# specs and reports

@dataclass
class ExperimentSpec:
    algorithm: str
    family: str
    params: dict = field(default_factory=dict)
    n_grid: list = field(default_factory=list)
    trials: int = 1
    preset: str = "desk"
    seed: int = 0
    amplify: int = 1
    exact_limit: int = 2048
    out: str | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidInput(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.family not in generators.FAMILY_NAMES:
            raise InvalidInput(f"unknown family {self.family!r}")
        if self.preset not in ("desk", "paper"):
            raise InvalidInput(f"unknown preset {self.preset!r}")
        if self.trials < 1 or self.amplify < 1:
            raise InvalidInput("trials and amplify must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def families(self) -> list[generators.GraphFamily]:
        base = generators.GraphFamily(self.family, dict(self.params))
        if not self.n_grid:
            return [base]
        return [generators.sized(base, int(n)) for n in self.n_grid]


def constants_digest(algorithm: str, preset: str) -> str:
    """Short hash of every constant the algorithm can read under `preset`."""
    payload = {"algorithm": algorithm, "ec": EcConfig.named(preset).constants(),
               "stream": StreamConfig.named(preset).constants()}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def run_trial(spec: ExperimentSpec, family: generators.GraphFamily, seed: int) -> dict:
    graph_rng, alg_rng = _streams(seed)
    row = {"algorithm": spec.algorithm, "preset": spec.preset, "seed": seed}
    try:
        G = generators.generate(family, graph_rng)
        row.update(n=G.n, m=G.m, delta=int(G.degrees.min()) if G.n else 0)
        cheap = spec.algorithm == "boruvka_forest"
        row["lambda_true"] = exact_value(spec.algorithm, G) if cheap or G.n <= spec.exact_limit else ""
        if spec.amplify > 1:
            got = run_amplified(spec.algorithm, G, spec.preset, alg_rng, spec.amplify)
        else:
            got = ALGORITHMS[spec.algorithm](G, spec.preset, alg_rng)
        row.update(got)
        row["fail"] = row["value"] is FAIL
        if row["fail"]:
            row["value"] = ""
    except Exception as exc:  # noqa: BLE001 - a crashing trial becomes an error row
        row.update(value="", fail=True, branch=f"error: {type(exc).__name__}: {exc}",
                   cut_units=0, modeled_units=0)
        for key in ("n", "m", "delta", "lambda_true"):
            row.setdefault(key, "")
    return {c: row.get(c, "") for c in COLUMNS}


def loglog_slope(ns, values) -> float:
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(values, float))
    return float(np.polyfit(x, y, 1)[0])


def doubling_ratios(ns, values) -> list[float]:
    """values[i+1] / values[i] rescaled to one doubling of n."""
    out = []
    for (n0, v0), (n1, v1) in zip(zip(ns, values), zip(ns[1:], values[1:])):
        out.append((v1 / v0) ** (1 / math.log2(n1 / n0)))
    return out


def summarize(rows: list[dict], spec: ExperimentSpec | None = None) -> dict:
    by_n = {}
    for r in rows:
        if r["n"] == "":
            continue
        by_n.setdefault(int(r["n"]), []).append(r)
    groups = []
    for n in sorted(by_n):
        rs = by_n[n]
        units = np.array([r["cut_units"] + r["modeled_units"] for r in rs], dtype=float)
        exact = [r for r in rs if r["lambda_true"] != ""]
        hits = sum(1 for r in exact if not r["fail"] and r["value"] == r["lambda_true"])
        groups.append({
            "n": n, "trials": len(rs),
            "fails": sum(1 for r in rs if r["fail"]),
            "errors": sum(1 for r in rs if str(r["branch"]).startswith("error")),
            "mean_units": float(units.mean()), "median_units": float(np.median(units)),
            "success_rate": hits / len(exact) if exact else None,
            "underestimates": sum(1 for r in exact if not r["fail"] and r["value"] < r["lambda_true"]),
        })
    out = {"groups": groups}
    if spec is not None:
        out["spec"] = asdict(spec)
        out["constants_digest"] = constants_digest(spec.algorithm, spec.preset)
    ns = [g["n"] for g in groups]
    means = [g["mean_units"] for g in groups]
    if len(ns) >= 2 and all(m > 0 for m in means):
        out["slope"] = loglog_slope(ns, means)
        out["doubling_ratios"] = doubling_ratios(ns, means)
    return out


def rows_to_csv(rows, fh):
    w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


def run_experiment(spec: ExperimentSpec):
    """All trials in order; returns (rows, summary) and writes CSV plus summary JSON if spec.out is set."""
    rows = []
    for j, fam in enumerate(spec.families()):
        for i in range(spec.trials):
            rows.append(run_trial(spec, fam, trial_seed(spec.seed, j, i)))
    summary = summarize(rows, spec)
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            rows_to_csv(rows, fh)
        with open(spec.out + ".summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return rows, summary


def csv_text(rows) -> str:
    buf = io.StringIO()
    rows_to_csv(rows, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------

@dataclass
class VerifyReport:
    status: str
    claimed: int
    exact: int
    margin: int
    witness: np.ndarray

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def __str__(self):
        side = np.flatnonzero(self.witness)
        small = side if side.size <= self.witness.size - side.size else np.flatnonzero(~self.witness)
        return (f"{self.status}: claimed {self.claimed}, exact {self.exact} (margin {self.margin:+d}); "
                f"witness side of size {small.size}: {small.tolist()[:20]}{' ...' if small.size > 20 else ''}")


def verify(G: SimpleGraph, claimed) -> VerifyReport:
    """Compare a claimed edge connectivity with the exact one.

    A claim below the exact value is flagged 'underestimate' (the pipelines
    must never produce one); above it, 'overestimate'.
    """
    w = exact_min_cut(G)
    claimed = int(claimed)
    margin = claimed - w.value
    status = "pass" if margin == 0 else ("underestimate" if margin < 0 else "overestimate")
    return VerifyReport(status, claimed, w.value, margin, w.side)


# ---------------------------------------------------------------------------
# built-in suites

def bench_specs(name: str, trials: int | None = None, seed: int = 0, preset: str = "desk",
                max_n: int | None = None) -> list[ExperimentSpec]:
    """Scaling suites: forest (G(n, 8/n) plus cycle), linear (G(n, 0.14)), mdcp (G(n, 0.27))."""
    table = {
        "forest": ("boruvka_forest", {"degree": 8, "with_cycle": True}, range(8, 14), 30),
        "linear": ("ec_linear", {"p": 0.14, "with_cycle": True}, range(9, 14), 10),
        "loglog": ("ec_loglog", {"p": 0.14, "with_cycle": True}, range(9, 13), 5),
        "mdcp": ("ec_mdcp", {"p": 0.27, "with_cycle": True}, range(10, 15), 3),
    }
    if name not in table:
        raise InvalidInput(f"unknown suite {name!r}; choose from {sorted(table) + list(OTHER_SUITES)}")
    algorithm, params, exps, default_trials = table[name]
    grid = [1 << e for e in exps if max_n is None or (1 << e) <= max_n]
    return [ExperimentSpec(algorithm, "gnp", params, grid, trials or default_trials, preset, seed)]


OTHER_SUITES = ("stream-memory", "exactness")


def stream_memory_rows(ns, seed: int = 0, preset: str = "desk", degree: float = 24.0) -> list[dict]:
    """Peak words of complete-arrival runs on G(n, degree/n) plus cycle.

    `instance_C` is the largest single-instance peak over n log2(n)^2;
    `parallel_C` the same for all instances summed as if run side by side.
    """
    cfg = StreamConfig.named(preset)
    rows = []
    for j, n in enumerate(ns):
        s = trial_seed(seed, j, 0)
        graph_rng, alg_rng = _streams(s)
        G = generators.gnp(n, min(1.0, degree / (n - 1)), graph_rng, with_cycle=True)
        out = stream_ec_complete(arrival_stream(G, "complete", alg_rng), cfg, alg_rng)
        scale = n * math.log2(n) ** 2
        peak = max(out.instance_peaks.values())
        rows.append({"n": n, "m": G.m, "delta": out.delta, "value": out.value if not out.failed else "",
                     "instance_peak": peak, "parallel_peak": out.parallel_peak, "budget": out.budget,
                     "instance_C": peak / scale, "parallel_C": out.parallel_peak / scale, "seed": s})
    return rows


def exactness_rows(algorithms, count: int = 100, trials: int = 40, seed: int = 0, preset: str = "desk",
                   lo: int = 32, hi: int = 512) -> list[dict]:
    """Amplified runs of each algorithm on a reproducible graph mix, one row per (graph, algorithm)."""
    rows = []
    for gi, (name, G) in enumerate(generators.mixed_graphs(count, lo, hi, seed)):
        lam = exact_min_cut(G).value
        for ai, algorithm in enumerate(algorithms):
            s = trial_seed(seed, gi, ai)
            got = run_amplified(algorithm, G, preset, _streams(s)[1], trials)
            value = "" if got["value"] is FAIL else got["value"]
            rows.append({"algorithm": algorithm, "preset": preset, "n": G.n, "m": G.m,
                         "delta": int(G.degrees.min()), "lambda_true": lam, "value": value,
                         "fail": got["value"] is FAIL, "branch": name, "cut_units": got["cut_units"],
                         "modeled_units": got["modeled_units"], "seed": s})
    return rows
