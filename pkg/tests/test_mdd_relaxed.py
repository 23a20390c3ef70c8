"""Width-bounded relaxation: state algebra, bucketing, refinement, filters."""

import pytest
from hypothesis import given, settings, strategies as st

from noverlap.engine import Infeasible, fixpoint
from noverlap.mdd_exact import compile_exact, extract_precedences_exact
from noverlap.mdd_exact import iter_label_paths as exact_paths
from noverlap.mdd_relaxed import (
    bucket_layer,
    compile_relaxed,
    edge_check,
    extract_precedences,
    iter_label_paths,
    lambda_relaxed,
    merge,
    mdd_propagator,
    refine,
    relaxed_bc_filter,
    stabilize,
    tau_relaxed,
)
from noverlap.model import Instance, Job, ModelVariant, generate_instance, post_model
from noverlap.oracle import oracle_report

states = st.tuples(
    st.integers(0, 2**6 - 1),
    st.integers(0, 2**6 - 1),
    st.integers(0, 40),
    st.just(3),
).map(lambda t: (t[0] & t[1], t[1] | t[0], t[2], t[3]))
# pre_all is forced to be a subset of pre_any, as on any real node


@given(states, states)
def test_merge_commutative(a, b):
    assert merge(a, b) == merge(b, a)


@given(states, states, states)
def test_merge_associative(a, b, c):
    assert merge(merge(a, b), c) == merge(a, merge(b, c))


@given(states)
def test_merge_idempotent(a):
    assert merge(a, a) == a


def test_merge_rejects_layer_mismatch():
    with pytest.raises(ValueError):
        merge((0, 0, 0, 1), (0, 0, 0, 2))


@given(states, states)
def test_merge_relaxes_both_arguments(a, b):
    m = merge(a, b)
    for s in (a, b):
        assert m[0] & s[0] == m[0]  # every-path set only shrinks
        assert m[1] | s[1] == m[1]  # some-path set only grows
        assert m[2] <= s[2]


def test_transition_orders_job_after_ready():
    lo, p = [0, 5], [2, 3]
    s1 = tau_relaxed((0, 0, 0, 0), 0, lo, p)
    assert s1 == (0b01, 0b01, 2, 1)
    s2 = tau_relaxed(s1, 1, lo, p)
    assert s2 == (0b11, 0b11, 8, 2)  # waits for release 5


def test_admissible_labels_skip_placed_and_late():
    lo, hi, p = [0, 0, 6], [4, 10, 8], [2, 2, 3]
    # job 0 already on every path; job 2 cannot finish from ready 6
    assert lambda_relaxed((0b001, 0b001, 6, 1), lo, hi, p) == [1]


def test_admissible_labels_drop_certainly_placed():
    lo, hi, p = [0, 0, 0], [20, 20, 20], [2, 2, 2]
    # depth 1 and one some-path job: every path placed job 1 already
    assert lambda_relaxed((0, 0b010, 2, 1), lo, hi, p) == [0, 2]


def test_bucket_layer_policies():
    mk = lambda est: (0b1, 0b1, est, 1)
    few = [mk(3), mk(9)]
    assert bucket_layer(few, 4) == few  # fits: untouched
    dup = [mk(3), mk(9), mk(3), mk(7)]
    by_value = bucket_layer(dup, 3)
    assert [s[2] for s in by_value] == [3, 7, 9]  # grouped by ready time
    wide = [mk(v) for v in (0, 1, 2, 10, 11, 20)]
    squeezed = bucket_layer(wide, 2)
    assert len(squeezed) == 2
    assert [s[2] for s in squeezed] == [0, 10]  # interval minima survive


@given(st.lists(states, min_size=1, max_size=20), st.integers(1, 6))
def test_bucket_layer_caps_width(sts, width):
    out = bucket_layer(list(sts), width)
    if len(sts) <= width:
        assert out == list(sts)
    else:
        assert len(out) <= width


def test_quartet_width3_unrefined(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 3)
    bounds, visits = relaxed_bc_filter(mdd)
    assert bounds[3][0] == 7
    assert visits == mdd.edge_count()


def test_quartet_width3_refined(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 3)
    assert refine(mdd, 2 * quartet_instance.n)
    bounds, _ = relaxed_bc_filter(mdd)
    assert bounds[3][0] == 8


def test_full_width_is_exact(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 64)
    assert mdd.is_exact()
    assert sorted(iter_label_paths(mdd)) == sorted(
        exact_paths(compile_exact(quartet_instance))
    )


def test_quartet_precedences_at_width3(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 3)
    pairs = extract_precedences(mdd)
    assert pairs <= frozenset({(0, 3), (1, 3), (2, 3)})
    assert extract_precedences(compile_relaxed(quartet_instance, 64)) == frozenset(
        {(0, 3), (1, 3), (2, 3)}
    )


def test_width_one_still_sound(small_corpus):
    for inst in small_corpus:
        rep = oracle_report(inst, include_optimum=False)
        if rep.feasible_count == 0:
            continue
        mdd = compile_relaxed(inst, 1)
        bounds, _ = relaxed_bc_filter(mdd)
        for j in range(inst.n):
            assert inst.jobs[j].release <= bounds[j][0] <= rep.min_start[j]
            assert rep.max_end[j] <= bounds[j][1] <= inst.jobs[j].deadline


def test_layer_width_respected(small_corpus):
    for inst in small_corpus:
        for width in (1, 2, 4):
            mdd = compile_relaxed(inst, width)
            assert mdd.max_width() <= width
            refine(mdd, 2 * inst.n)
            assert mdd.max_width() <= width


def test_refinement_monotone_on_bounds(small_corpus):
    """Refining never loosens the filtered bounds."""
    for inst in small_corpus:
        mdd = compile_relaxed(inst, 2)
        before, _ = relaxed_bc_filter(mdd)
        refine(mdd, 2 * inst.n)
        after, _ = relaxed_bc_filter(mdd)
        for (lo0, hi0), (lo1, hi1) in zip(before, after):
            assert lo1 >= lo0
            assert hi1 <= hi0


def test_edge_check_respects_sets(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 8)
    for e in mdd.alive_edges():
        assert edge_check(e, mdd)
        assert not e.src.pre_all >> e.label & 1
        assert not e.dst.suf_all >> e.label & 1


def test_stabilize_reaches_fixpoint(quartet_instance):
    mdd = compile_relaxed(quartet_instance, 3)
    assert not stabilize(mdd)  # compile already stabilized


def test_compile_detects_infeasible():
    inst = Instance(
        (
            Job(release=0, processing=2, deadline=2, due=2),
            Job(release=0, processing=2, deadline=2, due=2),
        )
    )
    with pytest.raises(Infeasible):
        compile_relaxed(inst, 4)


def _admits_path(mdd, labels):
    """Whether some alive root-to-sink walk carries this label sequence."""

    def walk(node, k):
        if k == len(labels):
            return not labels or node.layer == len(labels)
        return any(
            e.alive and walk(e.dst, k + 1)
            for e in node.out
            if e.label == labels[k]
        )

    return walk(mdd.root, 0)


@given(st.integers(2, 7), st.integers(0, 20_000), st.sampled_from([1, 2, 4, 8]))
@settings(max_examples=50, deadline=None)
def test_relaxation_contains_exact_paths(n, seed, width):
    """Every exact path survives in the relaxed diagram's path set."""
    inst = generate_instance(n, seed)
    try:
        exact = set(exact_paths(compile_exact(inst)))
    except Infeasible:
        return
    mdd = compile_relaxed(inst, width)
    for perm in exact:
        assert _admits_path(mdd, perm)


def test_propagator_kinds(quartet_instance):
    relaxed = mdd_propagator("relaxed_bc", 3, list(range(4)), quartet_instance)
    prec = mdd_propagator("precedence", 3, list(range(4)), quartet_instance)
    assert type(relaxed).__name__ == "RelaxedBcPropagator"
    assert type(prec).__name__ == "PrecedencePropagator"
    with pytest.raises(ValueError):
        mdd_propagator("nonsense", 3, list(range(4)), quartet_instance)


def test_relaxed_propagator_quartet(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.relaxed_bc(3))
    assert fixpoint(model.store, model.propagators)
    assert model.store.lo(model.starts[3]) == 8


def test_precedence_propagator_quartet(quartet_instance):
    """Precedence extraction alone leaves the weaker classic bound."""
    model = post_model(quartet_instance, ModelVariant.precedence(3))
    assert fixpoint(model.store, model.propagators)
    assert model.store.lo(model.starts[3]) == 7
