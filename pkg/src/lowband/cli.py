"""Command-line entry point: ``lowband {gen,run,count-triangles,verify}``.

Output files go to ``--out``, else ``$LOWBAND_OUT``, else ``./lowband-out``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .algorithms import ENGINES, PipelineConfig, count_triangles_graph, multiply
from .clustering import PRESETS, load_schedule
from .core import triple_loop_product
from .experiments import ExperimentSpec, run_experiment
from .fileformats import format_product, read_edges, read_instance, write_instance
from .generators import KINDS, GeneratorSpec, generate
from .semiring import SEMIRINGS
from .simulator import RoundBudgetExceeded

OUT_ENV = "LOWBAND_OUT"


def out_dir(arg: Optional[str]) -> Path:
    path = Path(arg or os.environ.get(OUT_ENV) or "lowband-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config(args) -> PipelineConfig:
    schedule = args.schedule if args.schedule in PRESETS else tuple(load_schedule(args.schedule))
    return PipelineConfig(schedule=schedule, dense_engine=args.engine, small_eps=args.eps, seed=args.seed,
                          round_budget=args.budget, pipeline=args.pipeline, trace=args.trace,
                          respect_small_d=args.respect_small_d)


def _pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schedule", default="table2",
                   help="preset (table1, table2, simplified) or a file of 'eps1 eps2 delta' rows")
    p.add_argument("--engine", choices=ENGINES, default="semiring3d", help="in-cluster engine")
    p.add_argument("--eps", type=float, default=None, help="exponent slack for the small-component phase")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None, help="abort after this many rounds")
    p.add_argument("--trace", action="store_true", help="write a per-message trace CSV")
    p.add_argument("--pipeline", choices=("full", "brute"), default="full")
    p.add_argument("--respect-small-d", action="store_true",
                   help="skip clustering and brute-force everything when d is too small for the layer bounds")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./lowband-out)")


def _parse_sweep(text: str) -> list[tuple[int, int]]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        n, d = item.lower().split("x")
        out.append((int(n), int(d)))
    return out


def cmd_gen(args) -> int:
    spec = GeneratorSpec(args.kind, args.n, args.d, args.density, args.seed, args.semiring)
    inst = generate(spec)
    path = Path(args.output) if args.output else out_dir(args.out) / f"{args.kind}-n{args.n}-d{args.d}-s{args.seed}.txt"
    write_instance(inst, path)
    print(path)
    return 0


def cmd_run(args) -> int:
    out = out_dir(args.out)
    cfg = _config(args)
    if args.instance:
        inst = read_instance(args.instance)
        stem = Path(args.instance).stem
        try:
            X, report = multiply(inst, cfg)
        except RoundBudgetExceeded as exc:
            print(f"round budget exhausted: {exc}", file=sys.stderr)
            return 3
        (out / f"{stem}-product.txt").write_text(format_product(X, inst.semiring))
        report.to_csv(out / f"{stem}-rounds.csv")
        (out / f"{stem}-summary.txt").write_text(report.summary())
        if args.trace:
            report.engine.write_trace(out / f"{stem}-trace.csv")
        print(report.summary(), end="")
        return 0
    if not args.sweep:
        print("run needs an instance file or --sweep", file=sys.stderr)
        return 2
    gen = GeneratorSpec(args.kind, *_parse_sweep(args.sweep)[0], args.density, args.seed, args.semiring)
    spec = ExperimentSpec(gen, cfg, _parse_sweep(args.sweep), args.reps, out, args.name, args.threads)
    result = run_experiment(spec)
    print(f"wrote {result.csv_path}")
    print(f"fitted slope: {'n/a' if result.slope is None else f'{result.slope:.4f}'}")
    bad = [r for r in result.rows if r["verdict"] not in ("exact-match", "spot-match")]
    for r in bad:
        print(f"n={r['n']} d={r['d']} rep={r['rep']}: {r['verdict']}", file=sys.stderr)
    return 1 if bad else 0


def cmd_count(args) -> int:
    edges = read_edges(args.graph)
    red = read_edges(args.red) if args.red else None
    n = args.n if args.n is not None else 1 + max((max(e) for e in edges), default=0)
    cfg = _config(args)
    print(count_triangles_graph(n, edges, red, cfg))
    return 0


def cmd_verify(args) -> int:
    inst = read_instance(args.instance)
    X, report = multiply(inst, _config(args))
    ok = X == triple_loop_product(inst)
    print(f"{'exact-match' if ok else 'mismatch'} rounds={report.total}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lowband", description="Sparse matrix multiplication in a simulated low-bandwidth network.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write a generated instance file")
    g.add_argument("--kind", choices=KINDS, default="randomUniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--semiring", choices=sorted(SEMIRINGS), default="integer")
    g.add_argument("--output", "-o", default=None, help="file name (default: derived, inside --out)")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="multiply one instance file, or sweep generated instances")
    r.add_argument("instance", nargs="?")
    r.add_argument("--sweep", default=None, help="comma-separated NxD points, e.g. 64x4,128x8")
    r.add_argument("--kind", choices=KINDS, default="plantedClusters")
    r.add_argument("--density", type=float, default=1.0)
    r.add_argument("--semiring", choices=sorted(SEMIRINGS), default="integer")
    r.add_argument("--reps", type=int, default=1)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--name", default="experiment")
    _pipeline_flags(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("count-triangles", help="count triangles of red edges in a bounded-degree graph")
    c.add_argument("graph")
    c.add_argument("red", nargs="?")
    c.add_argument("--n", type=int, default=None, help="vertex count (default: largest id + 1)")
    _pipeline_flags(c)
    c.set_defaults(func=cmd_count)

    v = sub.add_parser("verify", help="multiply an instance and compare with the plain triple loop")
    v.add_argument("instance")
    _pipeline_flags(v)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
