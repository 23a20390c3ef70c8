"""Brute-force reference: permutation enumeration, aggregates, optimum."""

import pytest
from hypothesis import given, settings, strategies as st

from noverlap.model import Instance, Job, Schedule, evaluate_objective, generate_instance
from noverlap.oracle import (
    ORACLE_GUARD,
    feasible_permutations,
    format_report,
    oracle_optimum_for_permutation,
    oracle_report,
)


def test_quartet_report(quartet_instance):
    rep = oracle_report(quartet_instance)
    assert rep.feasible_count == 2
    assert rep.min_start == (4, 0, 0, 8)
    assert rep.max_end == (6, 10, 9, 19)
    assert rep.precedences == frozenset({(0, 3), (1, 3), (2, 3)})
    assert rep.optimum == 5


def test_quartet_permutations(quartet_instance):
    # job 0 owns [4,6], so exactly one of jobs 1/2 fits before it
    perms = feasible_permutations(quartet_instance)
    assert sorted(perms) == [(1, 0, 2, 3), (2, 0, 1, 3)]


def test_guard_enforced():
    inst = generate_instance(ORACLE_GUARD + 1, 1)
    with pytest.raises(ValueError):
        feasible_permutations(inst)


def test_infeasible_instance_reports_empty():
    # two jobs competing for the same two slots plus one more that cannot fit
    jobs = (
        Job(release=0, processing=2, deadline=2, due=2),
        Job(release=0, processing=2, deadline=2, due=2),
    )
    rep = oracle_report(Instance(jobs))
    assert rep.feasible_count == 0
    assert rep.min_start is None
    assert rep.optimum is None
    assert "infeasible" in format_report(rep)


def test_bounds_override_narrows(quartet_instance):
    rep = oracle_report(quartet_instance, bounds=[(4, 6), (0, 10), (0, 9), (13, 19)])
    assert rep.feasible_count == 2
    assert rep.min_start[3] == 13


def test_optimum_respects_order(quartet_instance):
    assert oracle_optimum_for_permutation(quartet_instance, (2, 0, 1, 3)) == 5
    assert oracle_optimum_for_permutation(quartet_instance, (1, 0, 2, 3)) == 6
    with pytest.raises(ValueError):
        oracle_optimum_for_permutation(quartet_instance, (0, 1, 2, 3))
    with pytest.raises(ValueError):
        oracle_optimum_for_permutation(quartet_instance, (0, 0, 2, 3))


def test_report_text_is_stable(quartet_instance):
    assert format_report(oracle_report(quartet_instance)) == (
        "feasible_count 2\n"
        "min_start 4 0 0 8\n"
        "max_end 6 10 9 19\n"
        "precedences 0<3 1<3 2<3\n"
        "optimum 5\n"
    )


@given(st.integers(2, 6), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_sweep_agrees_with_enumeration(n, seed):
    """The two independent per-order optimizers agree on every order."""
    from noverlap.oracle import _enumerated_optimum, _sweep_optimum, _window_arrays

    inst = generate_instance(n, seed)
    lo, hi, p = _window_arrays(inst, None)
    due = [j.due for j in inst.jobs]
    for perm in feasible_permutations(inst)[:20]:
        assert _sweep_optimum(perm, lo, hi, p, due) == _enumerated_optimum(
            perm, lo, hi, p, due
        )


@given(st.integers(2, 6), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_optimum_is_attained_by_some_schedule(n, seed):
    """The reported optimum matches exhaustive search over start tuples."""
    inst = generate_instance(n, seed)
    rep = oracle_report(inst)
    if rep.feasible_count == 0:
        return
    best = None
    for perm in feasible_permutations(inst):
        best_perm = oracle_optimum_for_permutation(inst, perm)
        if best is None or best_perm < best:
            best = best_perm
    assert rep.optimum == best


@given(st.integers(2, 7), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_bounds_realizable(n, seed):
    """Each reported earliest start and latest end is hit by a concrete
    schedule that evaluate_objective accepts as overlap-free."""
    from noverlap.oracle import _greedy_starts, _latest_ends, _window_arrays

    inst = generate_instance(n, seed)
    rep = oracle_report(inst, include_optimum=False)
    if rep.feasible_count == 0:
        return
    lo, hi, p = _window_arrays(inst, None)
    hit_lo, hit_hi = set(), set()
    for perm in feasible_permutations(inst):
        starts = _greedy_starts(perm, lo, hi, p)
        ends = _latest_ends(perm, lo, hi, p)
        by_job = sorted(zip(perm, starts))
        evaluate_objective(inst, Schedule(tuple(s for _, s in by_job)))
        late = sorted(zip(perm, (e - p[j] for j, e in zip(perm, ends))))
        evaluate_objective(inst, Schedule(tuple(s for _, s in late)))
        for k, j in enumerate(perm):
            if starts[k] == rep.min_start[j]:
                hit_lo.add(j)
            if ends[k] == rep.max_end[j]:
                hit_hi.add(j)
        for j in range(n):
            assert rep.min_start[j] >= inst.jobs[j].release
            assert rep.max_end[j] <= inst.jobs[j].deadline
    assert hit_lo == set(range(n))
    assert hit_hi == set(range(n))


def test_precedences_respected_by_all_permutations(small_corpus):
    for inst in small_corpus:
        rep = oracle_report(inst, include_optimum=False)
        for perm in feasible_permutations(inst):
            pos = {j: k for k, j in enumerate(perm)}
            for i, j in rep.precedences:
                assert pos[i] < pos[j]
