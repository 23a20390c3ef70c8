"""Shared fixtures: the four-job worked example, small random corpora,
and the acceptance-criteria summary hook."""

import pytest

from noverlap.model import Instance, Job, generate_instance

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(num: int, ok: bool, detail: str) -> None:
        line = f"CRITERION {num:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
        _criterion_lines.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def quartet_jobs():
    """Four jobs with a tight window forcing the last job late.

    Job 0 can only run in [4, 6]; jobs 1 and 2 fight for the early
    slots; job 3 needs six units before its strict deadline at 19.
    """
    return (
        Job(release=4, processing=2, deadline=6, due=6),
        Job(release=0, processing=3, deadline=10, due=10),
        Job(release=0, processing=2, deadline=9, due=9),
        Job(release=7, processing=6, deadline=19, due=19),
    )


@pytest.fixture(scope="session")
def quartet_instance(quartet_jobs):
    return Instance(jobs=quartet_jobs)


def corpus(sizes, seeds):
    """Deterministic list of generated instances, one per (n, seed) pair."""
    return [generate_instance(n, seed) for n in sizes for seed in seeds]


@pytest.fixture(scope="session")
def small_corpus():
    """Instances small enough for the brute-force oracle."""
    return corpus(range(2, 7), range(1, 7))
