"""Command line entry point: gen, run, verify, bench, moments."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import generators, harness, moments
from .errors import InvalidInput
from .graph_core import load_graph, save_graph
from .streaming import MODELS, arrival_stream, write_stream


def _default_seed() -> int:
    raw = os.environ.get("CUTBENCH_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"CUTBENCH_SEED must be an integer, got {raw!r}") from None


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _params(pairs) -> dict:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep:
            raise SystemExit(f"family parameters look like key=value, got {item!r}")
        out[key] = _parse_value(value)
    return out


def _write_dicts(rows, fh):
    if not rows:
        return
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def cmd_gen(args):
    family = generators.GraphFamily(args.family, _params(args.params))
    G = family.generate(args.seed)
    out = args.out or "-"
    if args.stream:
        events = arrival_stream(G, args.stream, args.seed)
        if out == "-":
            for ev in events:
                print(ev.line())
        else:
            write_stream(events, out)
    elif out == "-":
        print(G.n, G.m)
        for a, b in G.edges():
            print(a, b)
    else:
        save_graph(G, out)
    print(f"{family.name}: n={G.n} m={G.m} min degree={int(G.degrees.min()) if G.n else 0}", file=sys.stderr)


def cmd_run(args):
    spec = harness.ExperimentSpec.load(args.spec)
    # --seed beats $CUTBENCH_SEED, which beats the seed stored in the spec
    if args.seed is not None:
        spec.seed = args.seed
    elif "CUTBENCH_SEED" in os.environ:
        spec.seed = _default_seed()
    if args.preset:
        spec.preset = args.preset
    if args.trials:
        spec.trials = args.trials
    if args.out:
        spec.out = args.out
    rows, summary = harness.run_experiment(spec)
    if not spec.out:
        harness.rows_to_csv(rows, sys.stdout)
    print(json.dumps(summary, indent=2, sort_keys=True), file=sys.stderr)


def cmd_verify(args):
    G = load_graph(args.graph)
    report = harness.verify(G, args.value)
    print(report)
    return {"pass": 0, "overestimate": 1, "underestimate": 2}[report.status]


def cmd_bench(args):
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    if args.suite == "stream-memory":
        top = args.max_n or 2048
        ns = [1 << e for e in range(7, 12) if (1 << e) <= top]
        rows = harness.stream_memory_rows(ns, args.seed, args.preset)
        with open(outdir / "stream-memory.csv", "w", newline="") as fh:
            _write_dicts(rows, fh)
        for r in rows:
            print(f"n={r['n']:6d} peak={r['instance_peak']:10d} C={r['instance_C']:.2f} "
                  f"all instances C={r['parallel_C']:.2f}")
        return 0
    if args.suite == "exactness":
        algorithms = ["ec_linear", "ec_loglog", "ec_mdcp", "ec_sequential", "stream_complete"]
        rows = harness.exactness_rows(algorithms, trials=args.trials or 40, seed=args.seed, preset=args.preset,
                                      hi=args.max_n or 512)
        with open(outdir / "exactness.csv", "w", newline="") as fh:
            harness.rows_to_csv(rows, fh)
        for a in algorithms:
            mine = [r for r in rows if r["algorithm"] == a]
            hits = sum(1 for r in mine if r["value"] == r["lambda_true"])
            print(f"{a:16s} {hits}/{len(mine)} exact")
        return 0
    for spec in harness.bench_specs(args.suite, args.trials, args.seed, args.preset, args.max_n):
        spec.out = str(outdir / f"{args.suite}.csv")
        _, summary = harness.run_experiment(spec)
        for g in summary["groups"]:
            print(f"n={g['n']:6d} mean units={g['mean_units']:14.1f} success={g['success_rate']} fails={g['fails']}")
        if "slope" in summary:
            ratios = ", ".join(f"{x:.2f}" for x in summary["doubling_ratios"])
            print(f"log-log slope {summary['slope']:.3f}; doubling ratios {ratios}")
        print(f"constants digest {summary['constants_digest']}")
    return 0


def cmd_moments(args):
    if args.d is None or args.p is None:
        raise SystemExit("moments needs --d and --p")
    f = args.f if args.f is not None else 1
    g = args.g if args.g is not None else args.d
    Q = moments.cond_inverse_moment(args.d, args.p, f, g)
    print(f"Q(d={args.d}, p={args.p}, f={f}, g={g}) = {Q:.12g}   bound 4/(pd) = {4 / (args.p * args.d):.6g}   "
          f"conditioning mass = {moments.conditioning_mass(args.d, args.p, f, g):.6g}")
    if args.c is not None:
        mean, second, var = moments.cond_ratio_moments(args.c, args.d, args.p, f, g)
        print(f"X/Y given {f} <= Y <= {g}: mean {mean:.12g}, second moment {second:.12g}, variance {var:.12g}")
        if args.k is not None:
            alpha = args.alpha if args.alpha is not None else moments.preserve_alpha(args.k)
            bound = moments.deviation_bound(args.c, args.d, args.k, alpha)
            print(f"Pr[X/Y >= {moments.deviation_threshold(args.c, args.d, args.k, alpha):.6g}] <= {bound:.6g}"
                  f" (alpha = {alpha:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--seed", type=int, default=None, help="master seed (default: $CUTBENCH_SEED or 0)")
        p.add_argument("--preset", choices=["desk", "paper"], default=None)
        if trials:
            p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=None)

    p = sub.add_parser("gen", help="write a graph (or an arrival stream) from a family")
    p.add_argument("family", choices=generators.FAMILY_NAMES)
    p.add_argument("params", nargs="*", help="family parameters as key=value")
    p.add_argument("--stream", choices=MODELS, help="emit a vertex-arrival stream instead of an edge list")
    common(p, trials=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run an experiment spec (JSON) and write CSV")
    p.add_argument("spec")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="compare a claimed edge connectivity with the exact one")
    p.add_argument("graph")
    p.add_argument("value", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="built-in scaling and exactness suites")
    p.add_argument("suite", choices=["forest", "linear", "loglog", "mdcp", *harness.OTHER_SUITES])
    p.add_argument("--max-n", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("moments", help="conditional moments of the sampled-neighbour ratio")
    for name, kind in (("c", int), ("d", int), ("p", float), ("f", int), ("g", int), ("k", float), ("alpha", float)):
        p.add_argument(f"--{name}", type=kind, default=None)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "seed") and args.seed is None and args.command != "run":
        args.seed = _default_seed()
    if getattr(args, "preset", "desk") is None:
        args.preset = "desk"
    try:
        return args.func(args) or 0
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
