"""Bound-consistent No-Overlap filtering via decision diagrams.

A small constraint-propagation library for single-machine disjunctive
scheduling with earliness-tardiness costs, plus a replayable search and
benchmark harness for comparing filtering strength.
"""

from .engine import ChangeResult, DomainStore, Infeasible, Propagator, fixpoint
from .model import (
    Instance,
    InstanceFormatError,
    Job,
    Model,
    ModelVariant,
    Schedule,
    SplitMix64,
    evaluate_objective,
    format_instance,
    generate_instance,
    instance_digest,
    load_instance,
    parse_instance,
    post_model,
    save_instance,
)
from .classic import (
    ClassicNoOverlap,
    detectable_precedences,
    earliest_completion,
    edge_finding,
    not_first_not_last,
    overload_check,
)
from .mdd_exact import (
    ExactBcPropagator,
    ExactMdd,
    bc_filter,
    bc_filter_ends,
    compile_exact,
    extract_precedences_exact,
    filter_bounds_exact,
    mirror_bounds,
    mirror_instance,
)
from .mdd_relaxed import (
    PrecedencePropagator,
    RelaxedBcPropagator,
    RelaxedMdd,
    compile_relaxed,
    extract_precedences,
    mdd_propagator,
    refine,
    relaxed_bc_filter,
)
from .oracle import (
    OracleReport,
    format_report,
    oracle_optimum_for_permutation,
    oracle_report,
)
from .search import Decision, ReplayLog, SearchStats, gap, replay, solve

__version__ = "0.1.0"

__all__ = [
    "ChangeResult",
    "DomainStore",
    "Infeasible",
    "Propagator",
    "fixpoint",
    "Instance",
    "InstanceFormatError",
    "Job",
    "Model",
    "ModelVariant",
    "Schedule",
    "SplitMix64",
    "evaluate_objective",
    "format_instance",
    "generate_instance",
    "instance_digest",
    "load_instance",
    "parse_instance",
    "post_model",
    "save_instance",
    "ClassicNoOverlap",
    "detectable_precedences",
    "earliest_completion",
    "edge_finding",
    "not_first_not_last",
    "overload_check",
    "ExactBcPropagator",
    "ExactMdd",
    "bc_filter",
    "bc_filter_ends",
    "compile_exact",
    "extract_precedences_exact",
    "filter_bounds_exact",
    "mirror_bounds",
    "mirror_instance",
    "PrecedencePropagator",
    "RelaxedBcPropagator",
    "RelaxedMdd",
    "compile_relaxed",
    "extract_precedences",
    "mdd_propagator",
    "refine",
    "relaxed_bc_filter",
    "oracle_optimum_for_permutation",
    "OracleReport",
    "format_report",
    "oracle_report",
    "Decision",
    "ReplayLog",
    "SearchStats",
    "gap",
    "replay",
    "solve",
]
