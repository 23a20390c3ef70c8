"""Replayable depth-first branch and bound.

A solve records every branching decision into a pre-order log. Replaying
the log against another model of the same instance walks the identical
tree, skipping (without counting) any recorded subtree whose root the
replayed model already proves infeasible, and re-applies the recorded
incumbent costs as objective cuts at the same positions. Node counts are
then a like-for-like measure of propagation strength: a model that
filters more visits a subset of the recorded nodes.

Branching is binary on start variables: left assigns the smallest value,
right excludes it. Variable choice follows conflict ordering: the most
recently failed variable first, falling back to the smallest lower bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .engine import ChangeResult, DomainStore, fixpoint
from .model import Model, Schedule, instance_digest

__all__ = [
    "ASSIGN",
    "EXCLUDE_BELOW",
    "Decision",
    "LogEntry",
    "ReplayLog",
    "SearchStats",
    "cos_next_decision",
    "solve",
    "replay",
    "gap",
]

ASSIGN = "assign"
EXCLUDE_BELOW = "exclude_below"

STATUS_OK = "ok"
STATUS_FAIL = "fail"
STATUS_SOL = "sol"
STATUS_FRONTIER = "frontier"

_STATUSES = (STATUS_OK, STATUS_FAIL, STATUS_SOL, STATUS_FRONTIER)

LOG_VERSION = 1


@dataclass(frozen=True)
class Decision:
    """One branching step on a start variable.

    ``assign`` pins the variable to ``value`` (left child), ``exclude_below``
    raises its lower bound to ``value`` (right child). Values are concrete,
    so a decision means the same thing in any model of the instance.
    """

    var: int
    kind: str
    value: int

    def __post_init__(self) -> None:
        if self.kind not in (ASSIGN, EXCLUDE_BELOW):
            raise ValueError(f"unknown decision kind {self.kind!r}")

    @property
    def polarity(self) -> str:
        return "left" if self.kind == ASSIGN else "right"

    def apply(self, store: DomainStore) -> bool:
        """Tighten the store; False when the domain wipes out."""
        if self.kind == ASSIGN:
            return store.assign(self.var, self.value) is not ChangeResult.EMPTY_DOMAIN
        return (
            store.tighten_lower(self.var, self.value)
            is not ChangeResult.EMPTY_DOMAIN
        )


@dataclass(frozen=True)
class LogEntry:
    depth: int
    decision: Decision
    status: str
    incumbent: int | None = None


@dataclass
class ReplayLog:
    """Pre-order record of one solve, serializable as line-oriented text."""

    digest: str
    heuristic: str = "cos"
    node_limit: int | None = None
    time_limit: float | None = None
    partial: bool = False
    entries: list[LogEntry] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"replaylog v{LOG_VERSION}",
            f"digest {self.digest}",
            f"heuristic {self.heuristic}",
            "limit nodes={} time={}".format(
                "none" if self.node_limit is None else self.node_limit,
                "none" if self.time_limit is None else repr(self.time_limit),
            ),
            f"partial {int(self.partial)}",
            f"entries {len(self.entries)}",
        ]
        for e in self.entries:
            line = f"{e.depth} {e.decision.var} {e.decision.kind} {e.decision.value} {e.status}"
            if e.incumbent is not None:
                line += f" {e.incumbent}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ReplayLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("replaylog v"):
            raise ValueError("not a replay log")
        if lines[0] != f"replaylog v{LOG_VERSION}":
            raise ValueError(f"unsupported log version: {lines[0]!r}")

        def take(idx: int, key: str) -> str:
            head, _, rest = lines[idx].partition(" ")
            if head != key:
                raise ValueError(f"expected {key!r} on line {idx + 1}")
            return rest

        digest = take(1, "digest")
        heuristic = take(2, "heuristic")
        nodes_part, time_part = take(3, "limit").split()
        node_limit = None
        raw = nodes_part.removeprefix("nodes=")
        if raw != "none":
            node_limit = int(raw)
        time_limit = None
        raw = time_part.removeprefix("time=")
        if raw != "none":
            time_limit = float(raw)
        partial = take(4, "partial") == "1"
        count = int(take(5, "entries"))
        entries = []
        for ln in lines[6 : 6 + count]:
            parts = ln.split()
            if len(parts) not in (5, 6):
                raise ValueError(f"malformed entry line: {ln!r}")
            depth, var, kind, value, status = parts[:5]
            if status not in _STATUSES:
                raise ValueError(f"unknown status {status!r}")
            incumbent = int(parts[5]) if len(parts) == 6 else None
            entries.append(
                LogEntry(int(depth), Decision(int(var), kind, int(value)), status, incumbent)
            )
        if len(entries) != count:
            raise ValueError(f"expected {count} entries, found {len(entries)}")
        return cls(digest, heuristic, node_limit, time_limit, partial, entries)


@dataclass
class SearchStats:
    nodes: int = 0
    failures: int = 0
    best_cost: int | None = None
    wall_ms: float = 0.0
    prop_ms: float = 0.0
    prop_samples: list[float] = field(default_factory=list)


class _ConflictOrder:
    """Last-conflict stamps per variable; freshest conflict wins."""

    __slots__ = ("_stamps", "_clock")

    def __init__(self) -> None:
        self._stamps: dict[int, int] = {}
        self._clock = 0

    def bump(self, var: int) -> None:
        self._clock += 1
        self._stamps[var] = self._clock

    def stamp(self, var: int) -> int:
        return self._stamps.get(var, 0)


def cos_next_decision(model: Model, conflicts: _ConflictOrder) -> Decision:
    """Branching decision at the current store state: among unfixed start
    variables pick the highest conflict stamp, break ties by smallest lower
    bound then smallest id, and propose assigning that bound."""
    store = model.store
    best = None
    best_key = None
    for v in model.unfixed_starts():
        key = (-conflicts.stamp(v), store.lo(v), v)
        if best_key is None or key < best_key:
            best, best_key = v, key
    if best is None:
        raise ValueError("no unfixed start variable to branch on")
    return Decision(best, ASSIGN, store.lo(best))


def _right_sibling(decision: Decision) -> Decision:
    return Decision(decision.var, EXCLUDE_BELOW, decision.value + 1)


def _timed_fixpoint(model: Model, stats: SearchStats) -> bool:
    t0 = time.perf_counter()
    ok = fixpoint(model.store, model.propagators)
    dt = (time.perf_counter() - t0) * 1000.0
    stats.prop_ms += dt
    stats.prop_samples.append(dt)
    return ok


def _solution_cost(model: Model) -> int:
    store = model.store
    lo = store.lo(model.objective)
    assert lo == store.hi(model.objective)
    return lo


def solve(
    model: Model,
    heuristic: str = "cos",
    time_limit: float | None = None,
    node_limit: int | None = None,
) -> tuple[Schedule | None, SearchStats, ReplayLog]:
    """Depth-first branch and bound from the model's current root state.

    Every visited node lands in the replay log in visit (pre-order)
    order. Improving solutions tighten the objective upper bound for the
    rest of the search and are tagged on their log entries, forming the
    incumbent trace a replay re-applies. A time or node limit truncates
    the search and flags the log partial.
    """
    if heuristic != "cos":
        raise ValueError(f"unknown heuristic {heuristic!r}")
    store = model.store
    stats = SearchStats()
    log = ReplayLog(
        digest=instance_digest(model.instance),
        heuristic=heuristic,
        node_limit=node_limit,
        time_limit=time_limit,
    )
    conflicts = _ConflictOrder()
    started = time.perf_counter()
    best_starts: tuple[int, ...] | None = None
    incumbent: int | None = None

    def out_of_time() -> bool:
        return time_limit is not None and time.perf_counter() - started > time_limit

    stats.nodes = 1
    pending: list[tuple[int, Decision]] = []
    if _timed_fixpoint(model, stats):
        if model.unfixed_starts():
            left = cos_next_decision(model, conflicts)
            pending.append((1, _right_sibling(left)))
            pending.append((1, left))
        else:
            incumbent = _solution_cost(model)
            best_starts = tuple(store.lo(v) for v in model.starts)
    else:
        stats.failures = 1

    checkpoints: list[int] = []
    while pending:
        if out_of_time() or (node_limit is not None and stats.nodes >= node_limit):
            log.partial = True
            break
        depth, decision = pending.pop()
        while len(checkpoints) >= depth:
            store.restore(checkpoints.pop())
        checkpoints.append(store.checkpoint())
        stats.nodes += 1
        ok = decision.apply(store)
        if ok and incumbent is not None:
            ok = (
                store.tighten_upper(model.objective, incumbent - 1)
                is not ChangeResult.EMPTY_DOMAIN
            )
        if ok:
            ok = _timed_fixpoint(model, stats)
        if not ok:
            stats.failures += 1
            conflicts.bump(decision.var)
            log.entries.append(LogEntry(depth, decision, STATUS_FAIL))
            continue
        if not model.unfixed_starts():
            incumbent = _solution_cost(model)
            best_starts = tuple(store.lo(v) for v in model.starts)
            log.entries.append(LogEntry(depth, decision, STATUS_SOL, incumbent))
            continue
        if node_limit is not None and stats.nodes >= node_limit:
            log.entries.append(LogEntry(depth, decision, STATUS_FRONTIER))
            log.partial = True
            break
        log.entries.append(LogEntry(depth, decision, STATUS_OK))
        left = cos_next_decision(model, conflicts)
        pending.append((depth + 1, _right_sibling(left)))
        pending.append((depth + 1, left))

    stats.best_cost = incumbent
    stats.wall_ms = (time.perf_counter() - started) * 1000.0
    schedule = Schedule(best_starts) if best_starts is not None else None
    return schedule, stats, log


def replay(log: ReplayLog, model: Model) -> SearchStats:
    """Re-explore a recorded tree under this model's propagation.

    Walks the log in order, applying each recorded decision and the
    incumbent cut in force at that point of the recording. When this
    model proves a node infeasible that the recording expanded, the
    recorded subtree below it is skipped and not counted, which is
    exactly the node saving stronger filtering buys. Counts match the
    original solve when replayed against an equivalent model.
    """
    if log.digest != instance_digest(model.instance):
        raise ValueError("replay log does not match this instance")
    store = model.store
    stats = SearchStats()
    started = time.perf_counter()
    stats.nodes = 1
    root_ok = _timed_fixpoint(model, stats)
    if not root_ok:
        stats.failures = 1
    cut: int | None = None
    checkpoints: list[int] = []
    skip_below: int | None = None
    for entry in log.entries:
        skipped = not root_ok or (skip_below is not None and entry.depth > skip_below)
        if not skipped:
            skip_below = None
            while len(checkpoints) >= entry.depth:
                store.restore(checkpoints.pop())
            checkpoints.append(store.checkpoint())
            stats.nodes += 1
            ok = entry.decision.apply(store)
            if ok and cut is not None:
                ok = (
                    store.tighten_upper(model.objective, cut - 1)
                    is not ChangeResult.EMPTY_DOMAIN
                )
            if ok:
                ok = _timed_fixpoint(model, stats)
            if not ok:
                stats.failures += 1
                if entry.status != STATUS_FAIL:
                    skip_below = entry.depth
        # the incumbent trace advances at recorded positions no matter
        # how this model fared, so later cuts stay aligned
        if entry.incumbent is not None:
            cut = entry.incumbent
            stats.best_cost = entry.incumbent
    stats.wall_ms = (time.perf_counter() - started) * 1000.0
    return stats


def gap(z: int, z_prime: int) -> float:
    """Extra-nodes ratio of ``z`` over the reference count ``z_prime``."""
    if z_prime < 1:
        raise ValueError("reference node count must be >= 1")
    return (z - z_prime) / z_prime
