"""Multi-objective join-order optimization.

The package picks join orders and physical operators for queries whose cost
is a vector, not a scalar: run time, energy, memory, result completeness and
so on, each weighted or bounded by the user. Three engines share one dynamic
program over table subsets:

* ``exa_optimize`` keeps every Pareto-optimal plan per subset and is exact.
* ``rta_optimize`` coarsens dominance by a factor ``alpha`` in one pass and
  returns a plan whose weighted cost is within ``alpha`` of the optimum.
* ``ira_optimize`` re-runs the coarsened search with a tightening precision
  schedule until a bounded instance is solved within ``alpha``.

`oracle_frontier` enumerates every bushy plan outright, which makes the
guarantees checkable on small queries, and `bench` generates seeded random
workloads so runs are reproducible down to the byte.
"""
from __future__ import annotations

from .bench import (
    SHAPES,
    AlgorithmSpec,
    Profile,
    RunMetrics,
    TestCase,
    generate_query,
    generate_testcase,
    run_benchmark,
)
from .catalog import (
    Catalog,
    PreparedQuery,
    Predicate,
    Query,
    Table,
    crossing_selectivity,
    join_cardinality,
    validate_query,
)
from .costs import (
    UNBOUNDED,
    DegenerateInstanceWarning,
    Objective,
    approx_dominates,
    dominates,
    relative_cost,
    respects_bounds,
    strictly_dominates,
    weighted_cost,
)
from .errors import (
    EnumerationLimitError,
    GridUndefinedError,
    IterationLimitError,
    MismatchedObjectivesError,
    MoqoError,
    OperatorInapplicableError,
    QuerySpecError,
    ScheduleUndefinedError,
)
from .frontier import PlanSet, grid_bucket, pareto_mask
from .optimizer import (
    ChosenPlan,
    IterationStats,
    OptimizerReport,
    ProblemInstance,
    exa_optimize,
    find_pareto_plans,
    ira_optimize,
    ira_precision,
    rta_optimize,
    select_best,
)
from .oracle import (
    OracleFrontier,
    check_guarantee,
    count_bushy,
    enumerate_all_plans,
    estimate_plan_count,
    oracle_frontier,
    true_pareto,
)
from .plans import (
    CostModel,
    CostModelConfig,
    JoinKind,
    JoinOp,
    OperatorSpace,
    PlanRecord,
    PlanRegistry,
    ScanKind,
    ScanOp,
    combine_plans,
    default_operator_space,
    parse_plan,
    scan_plan,
    serialize_plan,
    uniform_operator_space,
)
from .specio import (
    METRICS_COLUMNS,
    QuerySpecDocument,
    export_frontier,
    export_metrics,
    parse_query_spec,
    parse_spec_document,
    render_query_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "Catalog",
    "ChosenPlan",
    "CostModel",
    "CostModelConfig",
    "DegenerateInstanceWarning",
    "EnumerationLimitError",
    "GridUndefinedError",
    "IterationLimitError",
    "IterationStats",
    "JoinKind",
    "JoinOp",
    "METRICS_COLUMNS",
    "MismatchedObjectivesError",
    "MoqoError",
    "Objective",
    "OperatorInapplicableError",
    "OperatorSpace",
    "OptimizerReport",
    "OracleFrontier",
    "PlanRecord",
    "PlanRegistry",
    "PlanSet",
    "PreparedQuery",
    "Predicate",
    "ProblemInstance",
    "Profile",
    "Query",
    "QuerySpecDocument",
    "QuerySpecError",
    "RunMetrics",
    "SHAPES",
    "ScanKind",
    "ScanOp",
    "ScheduleUndefinedError",
    "Table",
    "TestCase",
    "UNBOUNDED",
    "approx_dominates",
    "check_guarantee",
    "combine_plans",
    "count_bushy",
    "crossing_selectivity",
    "default_operator_space",
    "dominates",
    "enumerate_all_plans",
    "estimate_plan_count",
    "exa_optimize",
    "export_frontier",
    "export_metrics",
    "find_pareto_plans",
    "generate_query",
    "generate_testcase",
    "grid_bucket",
    "ira_optimize",
    "ira_precision",
    "join_cardinality",
    "oracle_frontier",
    "parse_plan",
    "parse_query_spec",
    "parse_spec_document",
    "pareto_mask",
    "relative_cost",
    "render_query_spec",
    "respects_bounds",
    "rta_optimize",
    "run_benchmark",
    "scan_plan",
    "select_best",
    "serialize_plan",
    "strictly_dominates",
    "true_pareto",
    "uniform_operator_space",
    "validate_query",
    "weighted_cost",
]
