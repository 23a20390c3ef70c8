"""Brute-force ground truth for small instances.

Enumerates feasible job permutations outright and derives from them the
quantities every other module must agree with: bound-consistent per-job
earliest starts and latest ends, precedences that hold in every feasible
order, and the optimal earliness-tardiness cost. Guarded to n <= 10; this
is a test fixture generator, never a solver path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Instance

__all__ = [
    "ORACLE_GUARD",
    "OracleReport",
    "oracle_report",
    "oracle_optimum_for_permutation",
    "feasible_permutations",
    "format_report",
]

ORACLE_GUARD = 10

_INF = float("inf")


@dataclass(frozen=True)
class OracleReport:
    feasible_count: int
    min_start: tuple[int, ...] | None
    max_end: tuple[int, ...] | None
    precedences: frozenset[tuple[int, int]]
    optimum: int | None


def _window_arrays(
    instance: Instance, bounds: list[tuple[int, int]] | None
) -> tuple[list[int], list[int], list[int]]:
    """Per-job (earliest start, latest end, processing), with optional live
    bounds overriding the instance windows."""
    if bounds is None:
        bounds = instance.start_windows()
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    p = [j.processing for j in instance.jobs]
    return lo, hi, p


def _greedy_starts(
    perm: tuple[int, ...], lo: list[int], hi: list[int], p: list[int]
) -> list[int] | None:
    """Earliest-start schedule for a fixed order; None when some deadline
    breaks. Each job starts at max(previous end, own earliest start)."""
    starts = []
    t = 0
    for j in perm:
        s = max(t, lo[j])
        t = s + p[j]
        if t > hi[j]:
            return None
        starts.append(s)
    return starts


def _latest_ends(
    perm: tuple[int, ...], lo: list[int], hi: list[int], p: list[int]
) -> list[int]:
    """Latest-end schedule for a feasible order, built backwards: each job
    ends at min(own latest end, next job's latest start)."""
    ends = [0] * len(perm)
    nxt = None
    for k in range(len(perm) - 1, -1, -1):
        j = perm[k]
        e = hi[j] if nxt is None else min(hi[j], nxt)
        ends[k] = e
        nxt = e - p[j]
    return ends


def feasible_permutations(
    instance: Instance,
    bounds: list[tuple[int, int]] | None = None,
    guard: int = ORACLE_GUARD,
) -> list[tuple[int, ...]]:
    """All job orders a greedy-earliest schedule can realize, via DFS with
    deadline pruning."""
    n = instance.n
    if n > guard:
        raise ValueError(f"oracle guard: n={n} exceeds {guard}")
    lo, hi, p = _window_arrays(instance, bounds)
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []
    used = [False] * n

    def extend(t: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for j in range(n):
            if used[j]:
                continue
            e = max(t, lo[j]) + p[j]
            if e > hi[j]:
                continue
            used[j] = True
            prefix.append(j)
            extend(e)
            prefix.pop()
            used[j] = False

    extend(0)
    return out


def _sweep_optimum(
    perm: tuple[int, ...], lo: list[int], hi: list[int], p: list[int], due: list[int]
) -> int:
    """Minimal sum of |end - due| for a fixed order: left-to-right dynamic
    sweep over integer end times with a running prefix minimum, O(n * H)."""
    horizon = max(hi)
    # best[t] = cheapest cost of the prefix so far given it ends by time t
    best = [0] * (horizon + 1)
    for j in perm:
        nxt = [_INF] * (horizon + 1)
        lo_e = lo[j] + p[j]
        for t in range(lo_e, hi[j] + 1):
            prev = best[t - p[j]]
            if prev != _INF:
                nxt[t] = prev + abs(t - due[j])
        # turn exact-end costs into end-by costs
        run = _INF
        for t in range(horizon + 1):
            if nxt[t] < run:
                run = nxt[t]
            nxt[t] = run
        best = nxt
    result = best[horizon]
    if result == _INF:
        raise ValueError("infeasible permutation")
    return int(result)


def _enumerated_optimum(
    perm: tuple[int, ...], lo: list[int], hi: list[int], p: list[int], due: list[int]
) -> int:
    """Same objective by plain integer enumeration of each start within its
    window (memoized on position and earliest allowed start). Independent of
    the sweep; the two must agree wherever both run."""
    n = len(perm)
    memo: dict[tuple[int, int], float] = {}

    def go(k: int, t: int) -> float:
        if k == n:
            return 0
        j = perm[k]
        t = max(t, lo[j])
        key = (k, t)
        hit = memo.get(key)
        if hit is not None:
            return hit
        acc = _INF
        for s in range(t, hi[j] - p[j] + 1):
            tail = go(k + 1, s + p[j])
            if tail != _INF:
                cost = abs(s + p[j] - due[j]) + tail
                if cost < acc:
                    acc = cost
        memo[key] = acc
        return acc

    result = go(0, 0)
    if result == _INF:
        raise ValueError("infeasible permutation")
    return int(result)


def oracle_optimum_for_permutation(
    instance: Instance,
    perm: tuple[int, ...],
    bounds: list[tuple[int, int]] | None = None,
) -> int:
    """Minimal earliness-tardiness cost over all start assignments honoring
    a fixed job order. Enumeration decides n <= 6; the sweep decides larger
    n (they agree on the overlap, which the tests pin down)."""
    n = instance.n
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {perm}")
    lo, hi, p = _window_arrays(instance, bounds)
    if _greedy_starts(perm, lo, hi, p) is None:
        raise ValueError("infeasible permutation")
    due = [j.due for j in instance.jobs]
    if n <= 6:
        return _enumerated_optimum(perm, lo, hi, p, due)
    return _sweep_optimum(perm, lo, hi, p, due)


def oracle_report(
    instance: Instance,
    bounds: list[tuple[int, int]] | None = None,
    include_optimum: bool = True,
    guard: int = ORACLE_GUARD,
) -> OracleReport:
    """Aggregate ground truth over every feasible permutation.

    min_start/max_end take the per-permutation greedy-earliest starts and
    latest-feasible ends; precedences keep exactly the pairs ordered the
    same way in all feasible permutations. The optimum (skippable for
    speed) always uses the sweep; its agreement with the enumeration path
    of oracle_optimum_for_permutation is a tested invariant.
    """
    n = instance.n
    perms = feasible_permutations(instance, bounds, guard)
    if not perms:
        return OracleReport(0, None, None, frozenset(), None)
    lo, hi, p = _window_arrays(instance, bounds)
    due = [j.due for j in instance.jobs]
    min_start = [None] * n
    max_end = [None] * n
    before = {(i, j) for i in range(n) for j in range(n) if i != j}
    best_cost = None
    for perm in perms:
        starts = _greedy_starts(perm, lo, hi, p)
        ends = _latest_ends(perm, lo, hi, p)
        pos = [0] * n
        for k, j in enumerate(perm):
            pos[j] = k
            if min_start[j] is None or starts[k] < min_start[j]:
                min_start[j] = starts[k]
            if max_end[j] is None or ends[k] > max_end[j]:
                max_end[j] = ends[k]
        for i, j in [pair for pair in before if pos[pair[0]] > pos[pair[1]]]:
            before.discard((i, j))
        if include_optimum:
            cost = _sweep_optimum(perm, lo, hi, p, due)
            if best_cost is None or cost < best_cost:
                best_cost = cost
    return OracleReport(
        feasible_count=len(perms),
        min_start=tuple(min_start),
        max_end=tuple(max_end),
        precedences=frozenset(before),
        optimum=best_cost,
    )


def format_report(report: OracleReport) -> str:
    """One stable text block per instance, for golden-file comparison.
    Job indices are 0-based file order."""
    lines = [f"feasible_count {report.feasible_count}"]
    if report.feasible_count == 0:
        lines.append("infeasible")
    else:
        lines.append("min_start " + " ".join(map(str, report.min_start)))
        lines.append("max_end " + " ".join(map(str, report.max_end)))
        pairs = sorted(report.precedences)
        lines.append(
            "precedences " + " ".join(f"{i}<{j}" for i, j in pairs)
            if pairs
            else "precedences none"
        )
        lines.append(
            "optimum ?" if report.optimum is None else f"optimum {report.optimum}"
        )
    return "\n".join(lines) + "\n"
