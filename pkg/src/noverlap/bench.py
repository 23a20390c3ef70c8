"""Benchmark driver and report tooling.

One experiment cell records a baseline search on an instance, then
replays that tree under stronger propagation variants; rows land in a
fixed-schema CSV. The report side turns such a CSV into performance
profile and cactus-plot data (plot-ready CSV) plus rendered PNG figures.
"""

from __future__ import annotations

import csv
import sys
import time
from dataclasses import dataclass

from .model import Instance, ModelVariant, post_model
from .search import gap, replay, solve

__all__ = [
    "CSV_COLUMNS",
    "RunRow",
    "method_label",
    "experiment_variants",
    "run_experiment",
    "write_rows",
    "read_rows",
    "profile_points",
    "cactus_points",
    "render_profile",
    "render_cactus",
]

CSV_COLUMNS = (
    "instance",
    "variant",
    "width",
    "nodes",
    "failures",
    "time_ms",
    "best_cost",
    "gap_vs_bc",
)

DEFAULT_WIDTHS = (8, 16, 32)
DEFAULT_EXACT_MAX_N = 16


@dataclass
class RunRow:
    """One (instance, variant) measurement, mirroring the CSV schema."""

    instance: str
    variant: str
    width: int | None
    nodes: int
    failures: int
    time_ms: float | None
    best_cost: int | None
    gap_vs_bc: float | None


def method_label(variant: str, width: int | None) -> str:
    return variant if width is None else f"{variant}(w={width})"


def experiment_variants(
    kinds: list[str] | None = None, widths: list[int] | None = None
) -> list[ModelVariant]:
    """Expand requested variant kinds and widths into concrete variants,
    baseline first so it can serve as the recording model."""
    if kinds is None:
        kinds = ["baseline", "relaxed_bc", "precedence", "exact_bc"]
    if widths is None:
        widths = list(DEFAULT_WIDTHS)
    out: list[ModelVariant] = []
    if "baseline" in kinds:
        out.append(ModelVariant.baseline())
    for kind in ("relaxed_bc", "precedence"):
        if kind in kinds:
            out.extend(ModelVariant(kind, w) for w in sorted(set(widths)))
    if "exact_bc" in kinds:
        out.append(ModelVariant.exact_bc())
    return out


def run_experiment(
    instances: list[tuple[str, Instance]],
    variants: list[ModelVariant] | None = None,
    node_limit: int | None = None,
    time_limit: float | None = None,
    deterministic: bool = False,
    exact_max_n: int = DEFAULT_EXACT_MAX_N,
    log_stream=None,
) -> list[RunRow]:
    """Record a baseline tree per instance and replay it per variant.

    The gap column is filled against the exact bound-consistent node
    count whenever that variant ran (it is skipped for n above
    ``exact_max_n``). Per-instance errors are reported to ``log_stream``
    and the run continues.
    """
    if variants is None:
        variants = experiment_variants()
    if deterministic and node_limit is None:
        raise ValueError("deterministic mode requires a node limit")
    if log_stream is None:
        log_stream = sys.stderr
    rows: list[RunRow] = []
    for name, instance in instances:
        try:
            rows.extend(
                _run_instance(
                    name, instance, variants, node_limit, time_limit, exact_max_n
                )
            )
        except Exception as exc:  # noqa: BLE001 - keep the batch going
            print(f"experiment: {name}: {exc}", file=log_stream)
    if deterministic:
        for row in rows:
            row.time_ms = None
    return rows


def _run_instance(
    name: str,
    instance: Instance,
    variants: list[ModelVariant],
    node_limit: int | None,
    time_limit: float | None,
    exact_max_n: int,
) -> list[RunRow]:
    base_model = post_model(instance, ModelVariant.baseline())
    t0 = time.perf_counter()
    _, base_stats, log = solve(
        base_model, time_limit=time_limit, node_limit=node_limit
    )
    base_ms = (time.perf_counter() - t0) * 1000.0
    measured: list[tuple[ModelVariant, int, int, float, int | None]] = []
    for variant in variants:
        if variant.kind == "exact_bc" and instance.n > exact_max_n:
            continue
        if variant.kind == "baseline":
            measured.append(
                (variant, base_stats.nodes, base_stats.failures, base_ms, base_stats.best_cost)
            )
            continue
        model = post_model(instance, variant)
        t0 = time.perf_counter()
        stats = replay(log, model)
        ms = (time.perf_counter() - t0) * 1000.0
        measured.append((variant, stats.nodes, stats.failures, ms, stats.best_cost))
    bc_nodes = next(
        (nodes for v, nodes, *_ in measured if v.kind == "exact_bc"), None
    )
    rows = []
    for variant, nodes, failures, ms, best in measured:
        rows.append(
            RunRow(
                instance=name,
                variant=variant.kind,
                width=variant.width,
                nodes=nodes,
                failures=failures,
                time_ms=ms,
                best_cost=best,
                gap_vs_bc=None if bc_nodes is None else gap(nodes, bc_nodes),
            )
        )
    return rows


def write_rows(rows: list[RunRow], stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.instance,
                r.variant,
                "" if r.width is None else r.width,
                r.nodes,
                r.failures,
                "" if r.time_ms is None else f"{r.time_ms:.3f}",
                "" if r.best_cost is None else r.best_cost,
                "" if r.gap_vs_bc is None else f"{r.gap_vs_bc:.6g}",
            ]
        )


def read_rows(stream) -> list[RunRow]:
    reader = csv.DictReader(stream)
    missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"CSV is missing columns: {sorted(missing)}")
    rows = []
    for rec in reader:
        rows.append(
            RunRow(
                instance=rec["instance"],
                variant=rec["variant"],
                width=int(rec["width"]) if rec["width"] else None,
                nodes=int(rec["nodes"]),
                failures=int(rec["failures"]),
                time_ms=float(rec["time_ms"]) if rec["time_ms"] else None,
                best_cost=int(rec["best_cost"]) if rec["best_cost"] else None,
                gap_vs_bc=float(rec["gap_vs_bc"]) if rec["gap_vs_bc"] else None,
            )
        )
    return rows


def _instances_of(rows: list[RunRow]) -> list[str]:
    seen: dict[str, None] = {}
    for r in rows:
        seen.setdefault(r.instance)
    return list(seen)


def profile_points(
    rows: list[RunRow],
) -> dict[str, list[tuple[float, float]]]:
    """Performance profile on node counts: per method, cumulative fraction
    of instances solved within a ratio of the instance-best count."""
    instances = _instances_of(rows)
    total = len(instances)
    best: dict[str, int] = {}
    for r in rows:
        if r.instance not in best or r.nodes < best[r.instance]:
            best[r.instance] = r.nodes
    ratios: dict[str, list[float]] = {}
    for r in rows:
        label = method_label(r.variant, r.width)
        ratios.setdefault(label, []).append(r.nodes / best[r.instance])
    out: dict[str, list[tuple[float, float]]] = {}
    for label, values in ratios.items():
        values.sort()
        points = []
        for i, v in enumerate(values, start=1):
            if points and points[-1][0] == v:
                points[-1] = (v, i / total)
            else:
                points.append((v, i / total))
        out[label] = points
    return out


def cactus_points(
    rows: list[RunRow],
) -> dict[str, list[tuple[float, float]]]:
    """Cactus data on replay gaps: per method, fraction of instances whose
    gap against the exact reference stays within each observed value."""
    instances = _instances_of(rows)
    total = len(instances)
    gaps: dict[str, list[float]] = {}
    for r in rows:
        if r.gap_vs_bc is None or r.variant == "exact_bc":
            continue
        label = method_label(r.variant, r.width)
        gaps.setdefault(label, []).append(r.gap_vs_bc)
    out: dict[str, list[tuple[float, float]]] = {}
    for label, values in gaps.items():
        values.sort()
        points = []
        for i, v in enumerate(values, start=1):
            if points and points[-1][0] == v:
                points[-1] = (v, i / total)
            else:
                points.append((v, i / total))
        out[label] = points
    return out


def write_points_csv(
    points: dict[str, list[tuple[float, float]]], x_name: str, stream
) -> None:
    writer = csv.writer(stream)
    writer.writerow(["method", x_name, "fraction"])
    for label in sorted(points):
        for x, frac in points[label]:
            writer.writerow([label, f"{x:.6g}", f"{frac:.6g}"])


def _render_steps(points, x_label, y_label, title, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label in sorted(points):
        pts = points[label]
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        ax.step(xs, ys, where="post", label=label)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_profile(points, path) -> None:
    _render_steps(
        points,
        "node count ratio to instance best",
        "fraction of instances",
        "Performance profile (replayed node counts)",
        path,
    )


def render_cactus(points, path) -> None:
    _render_steps(
        points,
        "gap vs exact bound consistency",
        "fraction of instances",
        "Replay gap distribution",
        path,
    )
