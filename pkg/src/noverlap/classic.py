"""Classic polynomial No-Overlap filtering rules.

Each rule is a pure function over per-job arrays (earliest start lo,
latest end hi, processing p). Lower-bound rules are written once and the
upper-bound duals come from reflecting time across max(hi), which keeps
both sides provably symmetric. The propagator applies overload check,
detectable precedences, not-first/not-last, and edge finding in that
order, looping until nothing changes. Deliberately O(n^2)-ish sweeps with
naive ECT recomputation: filtering strength, not asymptotics, is what the
surrounding experiments measure.
"""

from __future__ import annotations

from .engine import ChangeResult, DomainStore, Infeasible, Propagator
from .model import Instance

__all__ = [
    "earliest_completion",
    "overload_check",
    "detectable_precedences",
    "not_first_not_last",
    "edge_finding",
    "ClassicNoOverlap",
]


def earliest_completion(est: list[int], p: list[int]) -> int:
    """ECT of a task set: max over nonempty subsets of (min est + total p).

    The maximizing subset always takes every task whose est is at least
    some threshold, so one descending sweep over est suffices.
    """
    if not est:
        raise ValueError("ECT of empty set")
    best = None
    acc = 0
    for e, q in sorted(zip(est, p), reverse=True):
        acc += q
        cand = e + acc
        if best is None or cand > best:
            best = cand
    return best


def _mirror(
    lo: list[int], hi: list[int], p: list[int]
) -> tuple[int, list[int], list[int]]:
    axis = max(hi)
    return axis, [axis - h for h in hi], [axis - l for l in lo]


def overload_check(lo: list[int], hi: list[int], p: list[int]) -> None:
    """Infeasible iff some task set cannot fit before its latest deadline:
    exists a set whose ECT exceeds its max latest end. Checking the sets
    {i : hi_i <= c} for each distinct c covers all witnesses."""
    order = sorted(range(len(lo)), key=lambda i: hi[i])
    members: list[int] = []
    for idx, i in enumerate(order):
        members.append(i)
        if idx + 1 < len(order) and hi[order[idx + 1]] == hi[i]:
            continue
        if earliest_completion([lo[m] for m in members], [p[m] for m in members]) > hi[i]:
            raise Infeasible


def _detectable_lower(lo: list[int], hi: list[int], p: list[int]) -> list[int]:
    """Earliest-start updates from detectable precedences: when even the
    earliest completion of i exceeds the latest start of j, j must precede
    i, and i starts no earlier than the ECT of all such j."""
    n = len(lo)
    new_lo = list(lo)
    for i in range(n):
        ect_i = lo[i] + p[i]
        preds = [j for j in range(n) if j != i and ect_i > hi[j] - p[j]]
        if preds:
            cand = earliest_completion([lo[j] for j in preds], [p[j] for j in preds])
            if cand > new_lo[i]:
                new_lo[i] = cand
    return new_lo


def _not_last_upper(lo: list[int], hi: list[int], p: list[int]) -> list[int]:
    """Latest-end updates: if the ECT of a set beats j's latest start, j is
    not last among them and must end by the set's largest latest start.
    Thresholding the set by latest start and taking the first firing
    threshold yields the tightest sound bound."""
    n = len(lo)
    new_hi = list(hi)
    lst = [hi[i] - p[i] for i in range(n)]
    for j in range(n):
        others = sorted((i for i in range(n) if i != j), key=lambda i: lst[i])
        members: list[int] = []
        for idx, i in enumerate(others):
            members.append(i)
            if idx + 1 < len(others) and lst[others[idx + 1]] == lst[i]:
                continue
            if lst[i] >= new_hi[j]:
                break
            ect = earliest_completion(
                [lo[m] for m in members], [p[m] for m in members]
            )
            if ect > lst[j]:
                new_hi[j] = lst[i]
                break
    return new_hi


def _edge_finding_lower(lo: list[int], hi: list[int], p: list[int]) -> list[int]:
    """Earliest-start updates from edge finding: when a set plus job j
    cannot all fit before the set's deadline, j runs after the whole set
    and starts no earlier than the set's ECT."""
    n = len(lo)
    new_lo = list(lo)
    for j in range(n):
        others = sorted((i for i in range(n) if i != j), key=lambda i: hi[i])
        members: list[int] = []
        for idx, i in enumerate(others):
            members.append(i)
            if idx + 1 < len(others) and hi[others[idx + 1]] == hi[i]:
                continue
            est_all = min(lo[j], min(lo[m] for m in members))
            p_all = p[j] + sum(p[m] for m in members)
            if est_all + p_all > hi[i]:
                cand = earliest_completion(
                    [lo[m] for m in members], [p[m] for m in members]
                )
                if cand > new_lo[j]:
                    new_lo[j] = cand
    return new_lo


def _two_sided(rule_lower, rule_upper, lo, hi, p):
    """Combine a native-side rule with its time-mirrored dual."""
    if rule_lower is not None:
        new_lo = rule_lower(lo, hi, p)
        axis, mlo, mhi = _mirror(lo, hi, p)
        m_new = rule_lower(mlo, mhi, p)
        new_hi = [axis - v for v in m_new]
    else:
        new_hi = rule_upper(lo, hi, p)
        axis, mlo, mhi = _mirror(lo, hi, p)
        m_new = rule_upper(mlo, mhi, p)
        new_lo = [axis - v for v in m_new]
    return new_lo, new_hi


def detectable_precedences(
    lo: list[int], hi: list[int], p: list[int]
) -> tuple[list[int], list[int]]:
    return _two_sided(_detectable_lower, None, lo, hi, p)


def not_first_not_last(
    lo: list[int], hi: list[int], p: list[int]
) -> tuple[list[int], list[int]]:
    return _two_sided(None, _not_last_upper, lo, hi, p)


def edge_finding(
    lo: list[int], hi: list[int], p: list[int]
) -> tuple[list[int], list[int]]:
    return _two_sided(_edge_finding_lower, None, lo, hi, p)


class ClassicNoOverlap(Propagator):
    """The baseline No-Overlap propagator: all four classic rules run in
    cheapest-first order until a sweep changes no bound."""

    priority = 1

    def __init__(self, starts: list[int], instance: Instance) -> None:
        self._starts = starts
        self._p = [j.processing for j in instance.jobs]

    def _apply(
        self, store: DomainStore, new_lo: list[int], new_hi: list[int]
    ) -> None:
        for v, q, s_lo, e_hi in zip(self._starts, self._p, new_lo, new_hi):
            if store.tighten_lower(v, s_lo) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible
            if store.tighten_upper(v, e_hi - q) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible

    def propagate(self, store: DomainStore) -> None:
        while True:
            before = store.generation
            lo = [store.lo(v) for v in self._starts]
            hi = [store.hi(v) + q for v, q in zip(self._starts, self._p)]
            overload_check(lo, hi, self._p)
            for rule in (detectable_precedences, not_first_not_last, edge_finding):
                new_lo, new_hi = rule(lo, hi, self._p)
                self._apply(store, new_lo, new_hi)
                lo = [store.lo(v) for v in self._starts]
                hi = [store.hi(v) + q for v, q in zip(self._starts, self._p)]
            if store.generation == before:
                return
