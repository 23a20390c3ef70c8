"""Problem model for one-machine just-in-time scheduling.

A job has a release time r, a processing time p > 0, a strict deadline dbar
(the job must END by dbar), and a due date d used only by the objective
sum of earliness and tardiness |end - d|. Start variables live in
[r, dbar - p]; ends are the derived view start + p, never independent
variables. All times are integers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .engine import DomainStore, Infeasible, Propagator

__all__ = [
    "Job",
    "Instance",
    "Schedule",
    "ModelVariant",
    "Model",
    "InstanceFormatError",
    "InfeasibleScheduleError",
    "SplitMix64",
    "generate_instance",
    "parse_instance",
    "format_instance",
    "load_instance",
    "save_instance",
    "instance_digest",
    "evaluate_objective",
    "post_model",
    "ObjectivePropagator",
]


class InstanceFormatError(ValueError):
    """Malformed instance text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InfeasibleScheduleError(ValueError):
    """A schedule violates a window or overlaps two jobs."""


@dataclass(frozen=True)
class Job:
    release: int
    processing: int
    deadline: int
    due: int

    def __post_init__(self) -> None:
        if self.processing <= 0:
            raise ValueError(f"non-positive processing time {self.processing}")
        if self.release < 0:
            raise ValueError(f"negative release time {self.release}")
        if self.release + self.processing > self.deadline:
            raise ValueError(
                f"window too small: r={self.release} p={self.processing} "
                f"dbar={self.deadline}"
            )
        if not (self.release + self.processing <= self.due <= self.deadline):
            raise ValueError(
                f"due date {self.due} outside [r+p, dbar] = "
                f"[{self.release + self.processing}, {self.deadline}]"
            )


@dataclass(frozen=True)
class Instance:
    jobs: tuple[Job, ...]

    def __post_init__(self) -> None:
        if not self.jobs:
            raise ValueError("instance needs at least one job")

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def horizon(self) -> int:
        """Upper bound on every completion time: the largest strict deadline."""
        return max(j.deadline for j in self.jobs)

    def start_windows(self) -> list[tuple[int, int]]:
        """Initial (earliest start, latest end) pairs, one per job."""
        return [(j.release, j.deadline) for j in self.jobs]


@dataclass(frozen=True)
class Schedule:
    starts: tuple[int, ...]

    def ends(self, instance: Instance) -> tuple[int, ...]:
        return tuple(s + j.processing for s, j in zip(self.starts, instance.jobs))


def evaluate_objective(instance: Instance, schedule: Schedule) -> int:
    """Total earliness plus tardiness, sum of |end - due| over jobs.

    Raises InfeasibleScheduleError when a job leaves its window or two jobs
    overlap. Since p > 0, a job is never both early and tardy, so the per-job
    sum collapses to the absolute deviation of its end from its due date.
    """
    if len(schedule.starts) != instance.n:
        raise InfeasibleScheduleError("schedule length mismatch")
    spans = []
    for s, job in zip(schedule.starts, instance.jobs):
        e = s + job.processing
        if s < job.release or e > job.deadline:
            raise InfeasibleScheduleError(
                f"job outside window: start {s}, window "
                f"[{job.release}, {job.deadline}], p={job.processing}"
            )
        spans.append((s, e))
    ordered = sorted(spans)
    for (_, e_prev), (s_next, _) in zip(ordered, ordered[1:]):
        if s_next < e_prev:
            raise InfeasibleScheduleError("two jobs overlap")
    return sum(abs((s + j.processing) - j.due) for s, j in zip(schedule.starts, instance.jobs))


# ---------------------------------------------------------------------------
# instance text format
# ---------------------------------------------------------------------------
# Line 1: n. Then n lines "r p dbar [d]"; d defaults to dbar. '#' starts a
# comment; blank lines are skipped. Round-trips are bit-exact on the
# canonical form emitted by format_instance.


def parse_instance(text: str) -> Instance:
    rows: list[tuple[int, list[int]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            values = [int(tok) for tok in body.split()]
        except ValueError:
            raise InstanceFormatError(line_no, f"non-integer token in {body!r}")
        rows.append((line_no, values))
    if not rows:
        raise InstanceFormatError(1, "empty instance text")
    head_no, head = rows[0]
    if len(head) != 1:
        raise InstanceFormatError(head_no, "first line must hold the job count only")
    n = head[0]
    if n < 1:
        raise InstanceFormatError(head_no, f"job count must be >= 1, got {n}")
    if len(rows) - 1 != n:
        raise InstanceFormatError(
            head_no, f"expected {n} job lines, found {len(rows) - 1}"
        )
    jobs = []
    for line_no, values in rows[1:]:
        if len(values) not in (3, 4):
            raise InstanceFormatError(line_no, "job line needs 'r p dbar [d]'")
        r, p, dbar = values[:3]
        d = values[3] if len(values) == 4 else dbar
        try:
            jobs.append(Job(release=r, processing=p, deadline=dbar, due=d))
        except ValueError as exc:
            raise InstanceFormatError(line_no, str(exc))
    return Instance(tuple(jobs))


def format_instance(instance: Instance) -> str:
    lines = [str(instance.n)]
    for j in instance.jobs:
        lines.append(f"{j.release} {j.processing} {j.deadline} {j.due}")
    return "\n".join(lines) + "\n"


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_instance(instance))


def instance_digest(instance: Instance) -> str:
    """Stable short digest of the canonical instance text."""
    return hashlib.sha256(format_instance(instance).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


class SplitMix64:
    """SplitMix64: 64-bit state, one addition and two xor-multiply mixes per
    draw. Chosen because it is tiny, portable, and splittable; the exact
    update is Steele et al.'s standard one, so any implementation can
    reproduce the corpus from a seed.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int) -> None:
        self._state = seed & self._MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]; modulo reduction of one 64-bit draw
        (the bias is below 2**-50 for the ranges used here)."""
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def spawn(self) -> "SplitMix64":
        """Split off an independent child stream."""
        return SplitMix64(self.next_u64())


def generate_instance(n: int, seed: int) -> Instance:
    """Random just-in-time instance where each job's window overlaps only
    its close neighbours in a packed reference sequence.

    Processing times are uniform on [1, 25]. With cursor c_1 = 0 and
    c_{j+1} = c_j + p_j (the packed start of job j), job j gets
    r_j = c_{j-2} and dbar_j = c_{j+2} + p_{j+2}, indices clamped to
    [1, n]; d_j is uniform on [r_j + p_j, dbar_j]. Draw order is all p_j
    first, then all d_j, each in job order, from one SplitMix64 stream.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = SplitMix64(seed)
    p = [rng.randint(1, 25) for _ in range(n)]
    c = [0] * n
    for j in range(1, n):
        c[j] = c[j - 1] + p[j - 1]
    jobs = []
    for j in range(n):
        r = c[max(0, j - 2)]
        k = min(n - 1, j + 2)
        dbar = c[k] + p[k]
        d = rng.randint(r + p[j], dbar)
        jobs.append(Job(release=r, processing=p[j], deadline=dbar, due=d))
    return Instance(tuple(jobs))


# ---------------------------------------------------------------------------
# model variants and posting
# ---------------------------------------------------------------------------

VARIANT_BASELINE = "baseline"
VARIANT_RELAXED_BC = "relaxed_bc"
VARIANT_PRECEDENCE = "precedence"
VARIANT_EXACT_BC = "exact_bc"

_WIDTH_VARIANTS = (VARIANT_RELAXED_BC, VARIANT_PRECEDENCE)
_ALL_VARIANTS = (VARIANT_BASELINE, VARIANT_RELAXED_BC, VARIANT_PRECEDENCE, VARIANT_EXACT_BC)


@dataclass(frozen=True)
class ModelVariant:
    """Which propagators a model posts: the classic suite alone, or the
    classic suite plus one decision-diagram propagator."""

    kind: str
    width: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ALL_VARIANTS:
            raise ValueError(f"unknown variant {self.kind!r}")
        if self.kind in _WIDTH_VARIANTS:
            if self.width is None or self.width < 1:
                raise ValueError(f"{self.kind} needs a width >= 1")
        elif self.width is not None:
            raise ValueError(f"{self.kind} takes no width")

    @classmethod
    def baseline(cls) -> "ModelVariant":
        return cls(VARIANT_BASELINE)

    @classmethod
    def relaxed_bc(cls, width: int) -> "ModelVariant":
        return cls(VARIANT_RELAXED_BC, width)

    @classmethod
    def precedence(cls, width: int) -> "ModelVariant":
        return cls(VARIANT_PRECEDENCE, width)

    @classmethod
    def exact_bc(cls) -> "ModelVariant":
        return cls(VARIANT_EXACT_BC)

    @property
    def label(self) -> str:
        """Name used in CSV rows and CLI flags, width kept separate."""
        return self.kind


@dataclass
class Model:
    """A posted instance: store, one start variable per job, the objective
    variable, and the variant's propagator stack."""

    instance: Instance
    variant: ModelVariant
    store: DomainStore
    starts: list[int]
    objective: int
    propagators: list[Propagator] = field(default_factory=list)

    def start_bounds(self) -> list[tuple[int, int]]:
        """Live (earliest start, latest end) pairs read from the store."""
        return [
            (self.store.lo(v), self.store.hi(v) + j.processing)
            for v, j in zip(self.starts, self.instance.jobs)
        ]

    def unfixed_starts(self) -> list[int]:
        return [v for v in self.starts if not self.store.is_fixed(v)]


class ObjectivePropagator(Propagator):
    """Ties the objective variable to sum of |end_j - due_j| by interval
    arithmetic: forward sum of per-job deviation intervals, backward slack
    pruning of each start once the objective upper bound tightens.
    """

    priority = 0

    def __init__(self, starts: list[int], objective: int, instance: Instance) -> None:
        self._starts = starts
        self._obj = objective
        self._p = [j.processing for j in instance.jobs]
        self._d = [j.due for j in instance.jobs]

    def _term_bounds(self, store: DomainStore) -> tuple[list[int], list[int]]:
        los, his = [], []
        for v, p, d in zip(self._starts, self._p, self._d):
            e_lo, e_hi = store.lo(v) + p, store.hi(v) + p
            if e_lo <= d <= e_hi:
                los.append(0)
            else:
                los.append(min(abs(e_lo - d), abs(e_hi - d)))
            his.append(max(abs(e_lo - d), abs(e_hi - d)))
        return los, his

    def propagate(self, store: DomainStore) -> None:
        from .engine import ChangeResult

        while True:
            before = store.generation
            term_lo, term_hi = self._term_bounds(store)
            total_lo = sum(term_lo)
            if store.tighten_lower(self._obj, total_lo) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible
            if store.tighten_upper(self._obj, sum(term_hi)) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible
            budget = store.hi(self._obj)
            for v, p, d, t_lo in zip(self._starts, self._p, self._d, term_lo):
                slack = budget - (total_lo - t_lo)
                if slack < 0:
                    raise Infeasible
                # |end - d| <= slack  =>  end in [d - slack, d + slack]
                if store.tighten_lower(v, d - slack - p) is ChangeResult.EMPTY_DOMAIN:
                    raise Infeasible
                if store.tighten_upper(v, d + slack - p) is ChangeResult.EMPTY_DOMAIN:
                    raise Infeasible
            if store.generation == before:
                return


def post_model(
    instance: Instance,
    variant: ModelVariant,
    refine_budget: int | None = None,
) -> Model:
    """Create the store, variables, and propagator stack for one variant.

    Every variant posts the classic No-Overlap suite and the objective link;
    decision-diagram variants add their propagator on top (the classic suite
    stays posted, redundantly, matching how the variants are benchmarked).
    """
    from .classic import ClassicNoOverlap
    from .mdd_exact import ExactBcPropagator
    from .mdd_relaxed import mdd_propagator

    store = DomainStore()
    starts = [
        store.new_var(j.release, j.deadline - j.processing) for j in instance.jobs
    ]
    hi_dev = sum(
        max(
            abs(j.release + j.processing - j.due),
            abs(j.deadline - j.due),
        )
        for j in instance.jobs
    )
    objective = store.new_var(0, hi_dev)
    props: list[Propagator] = [
        ObjectivePropagator(starts, objective, instance),
        ClassicNoOverlap(starts, instance),
    ]
    if variant.kind == VARIANT_EXACT_BC:
        props.append(ExactBcPropagator(starts, instance))
    elif variant.kind in _WIDTH_VARIANTS:
        props.append(
            mdd_propagator(
                variant.kind,
                variant.width,
                starts,
                instance,
                refine_budget=refine_budget,
            )
        )
    return Model(
        instance=instance,
        variant=variant,
        store=store,
        starts=starts,
        objective=objective,
        propagators=props,
    )
