"""Command-line front end.

Subcommands: ``gen`` writes a deterministic instance corpus, ``solve``
runs one branch-and-bound search, ``oracle`` prints brute-force ground
truth for a small instance, ``experiment`` records baseline trees and
replays them across propagation variants into a CSV, and ``report``
turns that CSV into performance-profile and cactus data plus rendered
figures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .model import (
    ModelVariant,
    SplitMix64,
    generate_instance,
    load_instance,
    post_model,
    save_instance,
)
from .oracle import format_report, oracle_report
from .search import solve

_VARIANT_CHOICES = ("baseline", "relaxed_bc", "precedence", "exact_bc", "all")
_WIDTH_KINDS = ("relaxed_bc", "precedence")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noverlap",
        description="Disjunctive-scheduling propagation benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a deterministic instance corpus")
    gen.add_argument("--n", type=int, required=True, help="jobs per instance")
    gen.add_argument("--count", type=int, required=True, help="instances to write")
    gen.add_argument("--seed", type=int, default=1, help="corpus seed")
    gen.add_argument("--out", type=Path, default=Path("."), help="output directory")

    solve_p = sub.add_parser("solve", help="run branch and bound on one instance")
    solve_p.add_argument("instance", type=Path)
    solve_p.add_argument("--variant", choices=_VARIANT_CHOICES[:-1], default="baseline")
    solve_p.add_argument("--width", type=int, default=16, help="diagram width cap")
    solve_p.add_argument("--time-limit", type=float, default=None, help="seconds")
    solve_p.add_argument("--node-limit", type=int, default=None)
    solve_p.add_argument("--out", type=Path, default=None, help="write the replay log here")

    oracle_p = sub.add_parser("oracle", help="print brute-force ground truth")
    oracle_p.add_argument("instance", type=Path)

    exp = sub.add_parser("experiment", help="record baseline trees, replay variants, emit CSV")
    exp.add_argument("instances", nargs="*", type=Path, help="instance files")
    exp.add_argument("--n", type=int, default=None, help="generate: jobs per instance")
    exp.add_argument("--count", type=int, default=None, help="generate: instance count")
    exp.add_argument("--seed", type=int, default=1, help="generate: corpus seed")
    exp.add_argument(
        "--variant",
        action="append",
        choices=_VARIANT_CHOICES,
        default=None,
        help="variant to run (repeatable; default all)",
    )
    exp.add_argument(
        "--width",
        action="append",
        type=int,
        default=None,
        help="diagram width (repeatable; default 8 16 32)",
    )
    exp.add_argument("--time-limit", type=float, default=None, help="seconds per recording")
    exp.add_argument("--node-limit", type=int, default=None)
    exp.add_argument(
        "--deterministic",
        action="store_true",
        help="reproducible output: requires --node-limit, omits timings",
    )
    exp.add_argument(
        "--exact-max-n",
        type=int,
        default=bench.DEFAULT_EXACT_MAX_N,
        help="skip the exact variant above this instance size",
    )
    exp.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")

    rep = sub.add_parser("report", help="profile/cactus data and figures from a CSV")
    rep.add_argument("csv", type=Path)
    rep.add_argument("--out", type=Path, default=None, help="output directory (default: CSV's)")
    return parser


def _cmd_gen(args) -> int:
    if args.count < 1:
        raise ValueError("--count must be >= 1")
    args.out.mkdir(parents=True, exist_ok=True)
    master = SplitMix64(args.seed)
    for k in range(args.count):
        instance = generate_instance(args.n, master.next_u64())
        save_instance(instance, args.out / f"jit_n{args.n}_s{args.seed}_{k}.txt")
    print(f"wrote {args.count} instances to {args.out}")
    return 0


def _variant_from_flags(kind: str, width: int) -> ModelVariant:
    if kind in _WIDTH_KINDS:
        return ModelVariant(kind, width)
    return ModelVariant(kind)


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    variant = _variant_from_flags(args.variant, args.width)
    model = post_model(instance, variant)
    schedule, stats, log = solve(
        model, time_limit=args.time_limit, node_limit=args.node_limit
    )
    best = "none" if stats.best_cost is None else stats.best_cost
    print(
        f"instance={args.instance.name} variant={variant.label} "
        f"nodes={stats.nodes} failures={stats.failures} best={best} "
        f"time_ms={stats.wall_ms:.3f} partial={int(log.partial)}"
    )
    if schedule is not None:
        print("starts " + " ".join(str(s) for s in schedule.starts))
    if args.out is not None:
        args.out.write_text(log.to_text())
        print(f"log written to {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    print(format_report(oracle_report(instance)))
    return 0


def _load_corpus(args) -> list[tuple[str, object]]:
    if args.instances:
        return [(p.name, load_instance(p)) for p in args.instances]
    if args.n is None or args.count is None:
        raise ValueError("experiment needs instance files or --n and --count")
    master = SplitMix64(args.seed)
    return [
        (
            f"jit_n{args.n}_s{args.seed}_{k}.txt",
            generate_instance(args.n, master.next_u64()),
        )
        for k in range(args.count)
    ]


def _cmd_experiment(args) -> int:
    kinds = None
    if args.variant is not None:
        kinds = list(dict.fromkeys(args.variant))
        if "all" in kinds:
            kinds = None
    widths = args.width
    if widths is not None and any(w < 1 for w in widths):
        raise ValueError("--width must be >= 1")
    corpus = _load_corpus(args)
    rows = bench.run_experiment(
        corpus,
        variants=bench.experiment_variants(kinds, widths),
        node_limit=args.node_limit,
        time_limit=args.time_limit,
        deterministic=args.deterministic,
        exact_max_n=args.exact_max_n,
    )
    if args.out is None:
        bench.write_rows(rows, sys.stdout)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            bench.write_rows(rows, fh)
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_report(args) -> int:
    with open(args.csv, newline="") as fh:
        rows = bench.read_rows(fh)
    out_dir = args.out if args.out is not None else args.csv.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = bench.profile_points(rows)
    cactus = bench.cactus_points(rows)
    written = []
    with open(out_dir / "profile.csv", "w", newline="") as fh:
        bench.write_points_csv(profile, "tau", fh)
    written.append(out_dir / "profile.csv")
    with open(out_dir / "cactus.csv", "w", newline="") as fh:
        bench.write_points_csv(cactus, "gap", fh)
    written.append(out_dir / "cactus.csv")
    if profile:
        bench.render_profile(profile, out_dir / "profile.png")
        written.append(out_dir / "profile.png")
    if cactus:
        bench.render_cactus(cactus, out_dir / "cactus.png")
        written.append(out_dir / "cactus.png")
    for path in written:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "deterministic", False) and args.node_limit is None:
        parser.error("--deterministic requires --node-limit")
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"noverlap: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
