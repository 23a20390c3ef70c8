"""Branch-and-bound search, replay logs, and the gap measure."""

import pytest
from hypothesis import given, settings, strategies as st

from noverlap.model import ModelVariant, generate_instance, instance_digest, post_model
from noverlap.oracle import oracle_report
from noverlap.search import (
    ASSIGN,
    EXCLUDE_BELOW,
    STATUS_FAIL,
    STATUS_OK,
    STATUS_SOL,
    Decision,
    LogEntry,
    ReplayLog,
    gap,
    replay,
    solve,
)


def test_solve_quartet_optimum(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    sched, stats, log = solve(model)
    assert sched is not None
    assert stats.best_cost == 5
    assert sched.starts == (4, 7, 2, 13)
    assert stats.nodes == 17
    assert not log.partial
    assert log.digest == instance_digest(quartet_instance)


def test_solve_detects_infeasible():
    from noverlap.model import Instance, Job

    inst = Instance(
        (
            Job(release=0, processing=2, deadline=3, due=3),
            Job(release=0, processing=2, deadline=3, due=3),
        )
    )
    sched, stats, log = solve(post_model(inst, ModelVariant.baseline()))
    assert sched is None
    assert stats.best_cost is None
    assert stats.nodes == 1  # the root is the only expansion


def test_solve_matches_oracle_small(small_corpus):
    for inst in small_corpus[:12]:
        rep = oracle_report(inst)
        sched, stats, _ = solve(post_model(inst, ModelVariant.baseline()))
        if rep.feasible_count == 0:
            assert sched is None
        else:
            assert stats.best_cost == rep.optimum


def test_node_limit_marks_partial(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    sched, stats, log = solve(model, node_limit=3)
    assert stats.nodes <= 3
    assert log.partial


def test_self_replay_identity(quartet_instance):
    """Replaying a log against the model that produced it revisits exactly
    the recorded nodes."""
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, stats, log = solve(model)
    again = replay(log, post_model(quartet_instance, ModelVariant.baseline()))
    assert again.nodes == stats.nodes
    assert again.best_cost == stats.best_cost


def test_replay_rejects_wrong_instance(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, _, log = solve(model)
    other = generate_instance(5, 1)
    with pytest.raises(ValueError):
        replay(log, post_model(other, ModelVariant.baseline()))


def test_replay_with_stronger_model_skips(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, stats, log = solve(model)
    strong = replay(log, post_model(quartet_instance, ModelVariant.exact_bc()))
    assert strong.nodes <= stats.nodes
    assert strong.best_cost == stats.best_cost


def test_decision_apply_polarity(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    v = model.starts[3]
    left = Decision(var=v, kind=ASSIGN, value=7)
    right = Decision(var=v, kind=EXCLUDE_BELOW, value=8)
    assert left.polarity == "left"
    assert right.polarity == "right"
    assert left.apply(model.store)
    assert (model.store.lo(v), model.store.hi(v)) == (7, 7)
    model2 = post_model(quartet_instance, ModelVariant.baseline())
    assert right.apply(model2.store)
    assert model2.store.lo(model2.starts[3]) == 8


def test_log_text_round_trip(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, _, log = solve(model, node_limit=9)
    text = log.to_text()
    parsed = ReplayLog.from_text(text)
    assert parsed == log
    assert parsed.to_text() == text


def test_log_text_header_fields(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, _, log = solve(model)
    text = log.to_text()
    lines = text.splitlines()
    assert lines[0] == "replaylog v1"
    assert lines[1] == f"digest {instance_digest(quartet_instance)}"
    assert any(line.startswith("entries ") for line in lines)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda t: t.replace("replaylog v1", "replaylog v9"),
        lambda t: t.replace("entries ", "entries x"),
        lambda t: "\n".join(t.splitlines()[:-1]),  # drop one entry
        lambda t: t.replace(" sol", " wat"),  # unknown status
    ],
)
def test_log_text_rejects_malformed(quartet_instance, mangle):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, _, log = solve(model)
    with pytest.raises(ValueError):
        ReplayLog.from_text(mangle(log.to_text()))


@given(st.integers(2, 6), st.integers(0, 5_000))
@settings(max_examples=25, deadline=None)
def test_solve_round_trip_random(n, seed):
    """solve -> serialize -> parse -> self-replay is lossless."""
    inst = generate_instance(n, seed)
    model = post_model(inst, ModelVariant.baseline())
    _, stats, log = solve(model)
    parsed = ReplayLog.from_text(log.to_text())
    again = replay(parsed, post_model(inst, ModelVariant.baseline()))
    assert again.nodes == stats.nodes


def test_statuses_recorded(quartet_instance):
    model = post_model(quartet_instance, ModelVariant.baseline())
    _, _, log = solve(model)
    seen = {e.status for e in log.entries}
    assert STATUS_OK in seen
    assert STATUS_SOL in seen
    sol_entries = [e for e in log.entries if e.status == STATUS_SOL]
    assert all(e.incumbent is not None for e in sol_entries)
    assert min(e.incumbent for e in sol_entries) == 5
    # the figure tree closes purely on bound cuts; a looser instance
    # exercises genuine domain wipeouts
    bumpy = post_model(generate_instance(5, 1), ModelVariant.baseline())
    _, stats, bumpy_log = solve(bumpy)
    assert stats.failures > 0
    assert STATUS_FAIL in {e.status for e in bumpy_log.entries}


def test_gap_definition():
    assert gap(10, 10) == 0
    assert gap(15, 10) == 0.5
    assert gap(5, 10) == -0.5
    with pytest.raises(ValueError):
        gap(5, 0)
