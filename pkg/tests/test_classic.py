"""Classic polynomial No-Overlap rules and their propagator."""

import pytest
from hypothesis import given, settings, strategies as st

from noverlap.classic import (
    ClassicNoOverlap,
    detectable_precedences,
    earliest_completion,
    edge_finding,
    not_first_not_last,
    overload_check,
)
from noverlap.engine import Infeasible, fixpoint
from noverlap.model import ModelVariant, generate_instance, post_model
from noverlap.oracle import oracle_report


def test_ect_single():
    assert earliest_completion([3], [4]) == 7


def test_ect_takes_best_subset():
    # {est 5} alone gives 5+2=7; the pair gives min(0,5)+6=6
    assert earliest_completion([0, 5], [4, 2]) == 7
    # here packing both is binding: min(0,1)+7=7 beats 1+3=4
    assert earliest_completion([0, 1], [4, 3]) == 7


def test_ect_rejects_empty():
    with pytest.raises(ValueError):
        earliest_completion([], [])


def _brute_ect(est, p):
    from itertools import combinations

    best = None
    idx = range(len(est))
    for k in range(1, len(est) + 1):
        for sub in combinations(idx, k):
            cand = min(est[i] for i in sub) + sum(p[i] for i in sub)
            if best is None or cand > best:
                best = cand
    return best


@given(
    st.lists(st.tuples(st.integers(0, 30), st.integers(1, 10)), min_size=1, max_size=7)
)
def test_ect_matches_subset_enumeration(pairs):
    est = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    assert earliest_completion(est, p) == _brute_ect(est, p)


def test_overload_detects_packed_conflict():
    # three unit jobs, two slots
    with pytest.raises(Infeasible):
        overload_check([0, 0, 0], [2, 2, 2], [1, 1, 1])
    overload_check([0, 0], [2, 2], [1, 1])  # exactly fits


def test_detectable_precedences_quartet(quartet_jobs):
    lo = [j.release for j in quartet_jobs]
    hi = [j.deadline for j in quartet_jobs]
    p = [j.processing for j in quartet_jobs]
    new_lo, new_hi = detectable_precedences(lo, hi, p)
    # jobs 0..2 all must precede job 3, pushing its earliest start to 7
    assert new_lo[3] >= 7
    assert new_hi[0] <= 6


def test_rules_never_widen(small_corpus):
    for inst in small_corpus:
        lo = [j.release for j in inst.jobs]
        hi = [j.deadline for j in inst.jobs]
        p = [j.processing for j in inst.jobs]
        for rule in (detectable_precedences, not_first_not_last, edge_finding):
            try:
                new_lo, new_hi = rule(lo, hi, p)
            except Infeasible:
                continue
            assert all(a >= b for a, b in zip(new_lo, lo))
            assert all(a <= b for a, b in zip(new_hi, hi))


def test_rules_are_sound_vs_oracle(small_corpus):
    """No rule prunes past the true bound-consistent envelope."""
    for inst in small_corpus:
        rep = oracle_report(inst, include_optimum=False)
        if rep.feasible_count == 0:
            continue
        lo = [j.release for j in inst.jobs]
        hi = [j.deadline for j in inst.jobs]
        p = [j.processing for j in inst.jobs]
        for rule in (detectable_precedences, not_first_not_last, edge_finding):
            new_lo, new_hi = rule(lo, hi, p)
            for j in range(inst.n):
                assert new_lo[j] <= rep.min_start[j]
                assert new_hi[j] >= rep.max_end[j]


@given(st.integers(2, 7), st.integers(0, 50_000))
@settings(max_examples=60, deadline=None)
def test_mirror_duality(n, seed):
    """Reflecting time maps each rule's lower updates onto its upper ones."""
    inst = generate_instance(n, seed)
    lo = [j.release for j in inst.jobs]
    hi = [j.deadline for j in inst.jobs]
    p = [j.processing for j in inst.jobs]
    axis = max(hi)
    mlo = [axis - h for h in hi]
    mhi = [axis - l for l in lo]
    for rule in (detectable_precedences, not_first_not_last, edge_finding):
        new_lo, new_hi = rule(lo, hi, p)
        m_lo, m_hi = rule(mlo, mhi, p)
        assert new_lo == [axis - v for v in m_hi]
        assert new_hi == [axis - v for v in m_lo]


def test_propagator_reaches_classic_fixpoint(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    assert fixpoint(model.store, model.propagators)
    # the classic suite narrows the last job's start to 7, not 8
    assert model.store.lo(model.starts[3]) == 7


def test_propagator_fails_on_overload():
    from noverlap.model import Instance, Job

    inst = Instance(
        (
            Job(release=0, processing=2, deadline=3, due=3),
            Job(release=0, processing=2, deadline=3, due=3),
        )
    )
    model = post_model(inst, ModelVariant.baseline())
    assert not fixpoint(model.store, model.propagators)
