"""Minimal constraint propagation kernel: integer interval variables with a
trailed domain store, and a priority/FIFO propagator fixpoint loop.

Time is integral throughout. The store is single-threaded; checkpoints and
restores must nest LIFO, anything else is a programming error and aborts.
"""

from __future__ import annotations

import heapq
from enum import Enum

__all__ = [
    "ChangeResult",
    "DomainStore",
    "Infeasible",
    "Propagator",
    "fixpoint",
]


class Infeasible(Exception):
    """Raised when propagation wipes out a domain. A result, not a bug."""


class ChangeResult(Enum):
    UNCHANGED = "unchanged"
    CHANGED = "changed"
    EMPTY_DOMAIN = "empty_domain"


class DomainStore:
    """Interval domains [lo, hi] with a trail for chronological backtracking.

    Bounds only ever tighten between checkpoints; ``restore`` undoes every
    tightening recorded after the matching ``checkpoint``. ``generation``
    counts successful bound changes and lets callers detect quiescence.
    """

    __slots__ = ("_lo", "_hi", "_trail", "_marks", "generation")

    def __init__(self) -> None:
        self._lo: list[int] = []
        self._hi: list[int] = []
        # trail entries: (var, is_upper, old_value)
        self._trail: list[tuple[int, bool, int]] = []
        self._marks: list[int] = []
        self.generation = 0

    def new_var(self, lo: int, hi: int) -> int:
        if lo > hi:
            raise ValueError(f"empty initial domain [{lo}, {hi}]")
        self._lo.append(lo)
        self._hi.append(hi)
        return len(self._lo) - 1

    @property
    def num_vars(self) -> int:
        return len(self._lo)

    def lo(self, var: int) -> int:
        return self._lo[var]

    def hi(self, var: int) -> int:
        return self._hi[var]

    def is_fixed(self, var: int) -> bool:
        return self._lo[var] == self._hi[var]

    def tighten_lower(self, var: int, value: int) -> ChangeResult:
        if value <= self._lo[var]:
            return ChangeResult.UNCHANGED
        if value > self._hi[var]:
            return ChangeResult.EMPTY_DOMAIN
        self._trail.append((var, False, self._lo[var]))
        self._lo[var] = value
        self.generation += 1
        return ChangeResult.CHANGED

    def tighten_upper(self, var: int, value: int) -> ChangeResult:
        if value >= self._hi[var]:
            return ChangeResult.UNCHANGED
        if value < self._lo[var]:
            return ChangeResult.EMPTY_DOMAIN
        self._trail.append((var, True, self._hi[var]))
        self._hi[var] = value
        self.generation += 1
        return ChangeResult.CHANGED

    def assign(self, var: int, value: int) -> ChangeResult:
        a = self.tighten_lower(var, value)
        if a is ChangeResult.EMPTY_DOMAIN:
            return a
        b = self.tighten_upper(var, value)
        if b is ChangeResult.EMPTY_DOMAIN:
            return b
        if a is ChangeResult.CHANGED or b is ChangeResult.CHANGED:
            return ChangeResult.CHANGED
        return ChangeResult.UNCHANGED

    def checkpoint(self) -> int:
        token = len(self._marks)
        self._marks.append(len(self._trail))
        return token

    def restore(self, token: int) -> None:
        if token != len(self._marks) - 1:
            raise RuntimeError(
                f"out-of-order restore: token {token}, depth {len(self._marks)}"
            )
        mark = self._marks.pop()
        while len(self._trail) > mark:
            var, is_upper, old = self._trail.pop()
            if is_upper:
                self._hi[var] = old
            else:
                self._lo[var] = old
        # a restore changes domains, so it must invalidate generation memos
        self.generation += 1


class Propagator:
    """Base propagator. Subclasses tighten bounds and raise Infeasible on wipeout.

    ``priority`` orders the queue (lower runs first); within a priority the
    queue is FIFO. ``propagate`` should be internally idempotent: it runs its
    own rules to a local fixpoint before returning.
    """

    priority = 1

    def propagate(self, store: DomainStore) -> None:
        raise NotImplementedError


def fixpoint(store: DomainStore, propagators: list[Propagator]) -> bool:
    """Run all propagators to mutual quiescence.

    Returns True when a fixpoint is reached (no propagator can tighten any
    bound further) and False on infeasibility; in the latter case the store
    contents are unspecified but still restorable via the trail.
    """
    heap: list[tuple[int, int, Propagator]] = []
    queued: set[int] = set()
    seq = 0

    def enqueue(p: Propagator) -> None:
        nonlocal seq
        if id(p) not in queued:
            heapq.heappush(heap, (p.priority, seq, p))
            queued.add(id(p))
            seq += 1

    for p in propagators:
        enqueue(p)
    while heap:
        _, _, p = heapq.heappop(heap)
        queued.discard(id(p))
        before = store.generation
        try:
            p.propagate(store)
        except Infeasible:
            return False
        if store.generation != before:
            for q in propagators:
                enqueue(q)
    return True
