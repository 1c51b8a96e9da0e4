"""Random workloads and benchmark execution over the three optimizers.

Test cases are generated from a seed and a `Profile` that fixes the ranges
to draw from: table count, join-graph shape, objective subset size, weight
and bound protocol, approximation factors, and operator space.  Everything
downstream of the seed is deterministic, so a suite can be regenerated
bit-for-bit from the seed range alone.

The bound protocol mirrors how bounded instances are usually stressed:
objectives with an a-priori bounded domain (tuple loss lives in [0, 1])
get a bound drawn uniformly from that domain, while open-ended objectives
get the minimum achievable value for the concrete instance, scaled by a
uniform factor from [1, 2].  The minimum comes from the brute-force oracle
when the instance is small enough to enumerate, otherwise from one exact
single-objective run per bounded objective.

`run_benchmark` executes (case, algorithm) pairs, records one `RunMetrics`
row per run, never aborts the suite on a single failure, and verifies the
near-optimality guarantee against the oracle whenever the instance is
within enumeration caps.
"""
from __future__ import annotations

import math
import random
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .catalog import Catalog, Predicate, Query, Table
from .costs import UNBOUNDED, Objective, validate_alpha
from .errors import EnumerationLimitError
from .oracle import (
    DEFAULT_PLAN_CAP,
    DEFAULT_TABLE_CAP,
    check_guarantee,
    estimate_plan_count,
    oracle_frontier,
)
from .optimizer import (
    OptimizerReport,
    ProblemInstance,
    exa_optimize,
    ira_optimize,
    rta_optimize,
)
from .plans import OperatorSpace, default_operator_space, uniform_operator_space

__all__ = [
    "SHAPES",
    "AlgorithmSpec",
    "Profile",
    "TestCase",
    "RunMetrics",
    "generate_query",
    "generate_testcase",
    "run_benchmark",
]

SHAPES = ("chain", "star", "clique", "random")

_ALGORITHMS = ("exa", "rta", "ira")
_ALGORITHM_RE = re.compile(r"^(exa|rta|ira)(?:\((\d+(?:\.\d+)?)\))?$")


@dataclass(frozen=True)
class AlgorithmSpec:
    """One optimizer to benchmark: the driver name plus its factor alpha."""

    name: str
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.name not in _ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}, expected one of {_ALGORITHMS}")
        object.__setattr__(self, "alpha", validate_alpha(self.alpha))
        if self.name == "exa" and self.alpha != 1.0:
            raise ValueError("exa is exact; it takes no approximation factor")

    @classmethod
    def parse(cls, text: str) -> "AlgorithmSpec":
        """Parse ``exa``, ``rta(1.5)``, ``ira(2)`` and friends."""
        m = _ALGORITHM_RE.match(text.strip())
        if not m:
            raise ValueError(f"cannot parse algorithm spec {text!r}")
        name, alpha = m.group(1), m.group(2)
        return cls(name, float(alpha) if alpha is not None else 1.0)

    @property
    def label(self) -> str:
        if self.name == "exa":
            return "exa"
        return f"{self.name}({self.alpha:g})"


def _parse_range(value, field: str, low: int, high: int) -> tuple[int, int]:
    if isinstance(value, int):
        value = (value, value)
    try:
        a, b = (int(x) for x in value)
    except (TypeError, ValueError):
        raise ValueError(f"profile.{field}: expected an int or [min, max] pair") from None
    if not (low <= a <= b <= high):
        raise ValueError(f"profile.{field}: need {low} <= min <= max <= {high}, got [{a}, {b}]")
    return a, b


@dataclass(frozen=True)
class Profile:
    """Ranges a benchmark suite draws from; one profile defines one suite.

    ``operators`` is either "default" (full scans, 1..5% samples, all join
    kinds at parallelism 1/2/4) or an int j for the uniform j-scan/j-join
    space whose plan counts follow the closed-form formula.
    """

    n: tuple[int, int] = (2, 4)
    l: tuple[int, int] = (2, 3)
    shapes: tuple[str, ...] = SHAPES
    random_p: float = 0.5
    m_max: float = 1000.0
    alphas: tuple[float, ...] = (1.15, 1.5, 2.0)
    algorithms: tuple[AlgorithmSpec, ...] = (AlgorithmSpec("exa"),)
    bounded: bool = False
    bound_fallback: bool = True
    operators: str | int = "default"
    deadline: float = 60.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", _parse_range(self.n, "n", 1, 16))
        object.__setattr__(self, "l", _parse_range(self.l, "l", 1, len(Objective)))
        for shape in self.shapes:
            if shape not in SHAPES:
                raise ValueError(f"profile.shapes: unknown shape {shape!r}")
        if not self.shapes:
            raise ValueError("profile.shapes: need at least one shape")
        if not (0.0 <= self.random_p <= 1.0):
            raise ValueError(f"profile.random_p: must lie in [0, 1], got {self.random_p}")
        if self.m_max < 10:
            raise ValueError("profile.m_max: cardinality range [10, m_max] needs m_max >= 10")
        if not self.alphas:
            raise ValueError("profile.alphas: need at least one factor")
        object.__setattr__(self, "alphas", tuple(validate_alpha(a) for a in self.alphas))
        if not self.algorithms:
            raise ValueError("profile.algorithms: need at least one algorithm")
        if self.operators != "default":
            if not isinstance(self.operators, int) or not (1 <= self.operators <= 3):
                raise ValueError(
                    f"profile.operators: expected \"default\" or an int in 1..3, got {self.operators!r}"
                )
        if self.deadline <= 0:
            raise ValueError("profile.deadline: must be positive seconds")

    @classmethod
    def from_dict(cls, data: dict) -> "Profile":
        known = {
            "n", "l", "shapes", "random_p", "m_max", "alphas",
            "algorithms", "bounded", "bound_fallback", "operators", "deadline",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"profile: unknown fields {sorted(unknown)}")
        kwargs = dict(data)
        if "shapes" in kwargs:
            kwargs["shapes"] = tuple(kwargs["shapes"])
        if "alphas" in kwargs:
            kwargs["alphas"] = tuple(kwargs["alphas"])
        if "algorithms" in kwargs:
            kwargs["algorithms"] = tuple(
                AlgorithmSpec.parse(a) if isinstance(a, str) else a
                for a in kwargs["algorithms"]
            )
        return cls(**kwargs)

    def operator_space(self) -> OperatorSpace:
        if self.operators == "default":
            return default_operator_space()
        return uniform_operator_space(self.operators)


@dataclass(frozen=True)
class TestCase:
    """One generated problem: everything needed to rerun it bit-for-bit."""

    seed: int
    shape: str
    n: int
    catalog: Catalog
    query: Query
    objectives: tuple[Objective, ...]
    weights: tuple[float, ...]
    bounds: tuple[float, ...]
    alpha_user: float
    algorithm: AlgorithmSpec
    operators: OperatorSpace

    @property
    def l(self) -> int:
        return len(self.objectives)

    def instance(self, alpha_user: float | None = None) -> ProblemInstance:
        return ProblemInstance(
            catalog=self.catalog,
            query=self.query,
            objectives=self.objectives,
            weights=self.weights,
            bounds=self.bounds,
            alpha_user=self.alpha_user if alpha_user is None else alpha_user,
        )


@dataclass(frozen=True)
class RunMetrics:
    """One benchmark row; ``error`` stays internal and is not exported."""

    seed: int
    algorithm: str
    alpha: float
    n: int
    l: int
    wall_ms: float
    plans_total: int
    plans_max_set: int
    iterations: int
    weighted_cost: float | None
    rho: float | None
    timeout: bool
    error: str | None = None


def _log_uniform(rng: random.Random, low: float, high: float) -> float:
    return math.exp(rng.uniform(math.log(low), math.log(high)))


def generate_query(
    shape: str,
    n: int,
    seed: int,
    *,
    m_max: float = 1000.0,
    random_p: float = 0.5,
    index_prob: float = 0.5,
) -> tuple[Catalog, Query]:
    """Draw a join graph of the given shape with log-uniform statistics.

    Cardinalities are log-uniform in [10, m_max], selectivities log-uniform
    in [1e-4, 1], and each table gets an index with probability
    ``index_prob``.  The random(p) shape keeps each table pair with
    probability p and then adds any missing chain edge, so the graph is
    always connected.
    """
    if shape not in SHAPES:
        raise ValueError(f"unknown query shape {shape!r}, expected one of {SHAPES}")
    if n < 1:
        raise ValueError(f"need at least one table, got n={n}")
    rng = random.Random(seed)
    names = tuple(f"T{i+1}" for i in range(n))
    tables = [
        Table(name, int(round(_log_uniform(rng, 10.0, m_max))), rng.random() < index_prob)
        for name in names
    ]

    pairs: list[tuple[str, str]] = []
    if shape == "chain":
        pairs = [(names[i], names[i + 1]) for i in range(n - 1)]
    elif shape == "star":
        pairs = [(names[0], names[i]) for i in range(1, n)]
    elif shape == "clique":
        pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    else:
        chosen = {
            (names[i], names[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < random_p
        }
        for i in range(n - 1):
            chosen.add((names[i], names[i + 1]))
        pairs = sorted(chosen)

    predicates = tuple(
        Predicate(a, b, _log_uniform(rng, 1e-4, 1.0)) for a, b in pairs
    )
    return Catalog(tables), Query(names, predicates)


def _min_achievable(
    catalog: Catalog,
    query: Query,
    objectives: Sequence[Objective],
    which: Sequence[int],
    operators: OperatorSpace,
    fallback: bool,
) -> dict[int, float]:
    """Per-objective minimum over all plans, for the requested objectives.

    Uses one oracle enumeration when the instance is within caps; otherwise
    falls back to one exact single-objective run per objective, which stays
    cheap because single-objective plan sets hold one plan per table set.
    """
    n = len(query)
    estimate = estimate_plan_count(n, len(operators.scans), len(operators.joins))
    if n <= DEFAULT_TABLE_CAP and estimate <= DEFAULT_PLAN_CAP:
        frontier = oracle_frontier(catalog, query, objectives, operators=operators)
        minima = frontier.minima()
        return {k: minima[k] for k in which}
    if not fallback:
        raise EnumerationLimitError(
            f"bound generation needs per-objective minima, but {n} tables "
            f"(about {estimate} plans) exceed the oracle caps and the "
            "single-objective fallback is disabled in the profile"
        )
    out: dict[int, float] = {}
    for k in which:
        single = ProblemInstance(
            catalog=catalog,
            query=query,
            objectives=(objectives[k],),
            weights=(1.0,),
        )
        report = exa_optimize(single, operators=operators)
        out[k] = report.chosen.cost[0]
    return out


def generate_testcase(seed: int, profile: Profile) -> TestCase:
    """Draw one reproducible test case; same (seed, profile) => same case."""
    rng = random.Random(seed)
    n = rng.randint(*profile.n)
    shape = profile.shapes[rng.randrange(len(profile.shapes))]
    catalog, query = generate_query(
        shape,
        n,
        rng.getrandbits(32),
        m_max=profile.m_max,
        random_p=profile.random_p,
    )
    l = rng.randint(*profile.l)
    objectives = tuple(rng.sample(tuple(Objective), l))
    weights = tuple(rng.uniform(0.0, 1.0) for _ in range(l))
    alpha_user = profile.alphas[rng.randrange(len(profile.alphas))]
    algorithm = profile.algorithms[rng.randrange(len(profile.algorithms))]
    operators = profile.operator_space()

    bounds = (UNBOUNDED,) * l
    if profile.bounded:
        k = rng.randint(1, l)
        which = sorted(rng.sample(range(l), k))
        factors = {j: rng.uniform(1.0, 2.0) for j in which}
        loss_draws = {j: rng.uniform(0.0, 1.0) for j in which}
        need_minima = [j for j in which if objectives[j] is not Objective.TUPLE_LOSS]
        minima = _min_achievable(
            catalog, query, objectives, need_minima, operators, profile.bound_fallback
        )
        drawn = list(bounds)
        for j in which:
            if objectives[j] is Objective.TUPLE_LOSS:
                drawn[j] = loss_draws[j]
            else:
                drawn[j] = minima[j] * factors[j]
        bounds = tuple(drawn)

    return TestCase(
        seed=seed,
        shape=shape,
        n=n,
        catalog=catalog,
        query=query,
        objectives=objectives,
        weights=weights,
        bounds=bounds,
        alpha_user=alpha_user,
        algorithm=algorithm,
        operators=operators,
    )


def _optimize(instance: ProblemInstance, spec: AlgorithmSpec, deadline: float, operators) -> OptimizerReport:
    if spec.name == "exa":
        return exa_optimize(instance, deadline=deadline, operators=operators)
    if spec.name == "rta":
        return rta_optimize(instance, deadline=deadline, operators=operators)
    return ira_optimize(instance, deadline=deadline, operators=operators)


def _run_pair(args) -> RunMetrics:
    case, spec, deadline, check, max_tables, max_plans = args
    instance = case.instance(alpha_user=spec.alpha)
    t0 = time.monotonic()
    try:
        report = _optimize(instance, spec, deadline, case.operators)
    except Exception as exc:
        return RunMetrics(
            seed=case.seed,
            algorithm=spec.name,
            alpha=spec.alpha,
            n=case.n,
            l=case.l,
            wall_ms=(time.monotonic() - t0) * 1000.0,
            plans_total=0,
            plans_max_set=0,
            iterations=0,
            weighted_cost=None,
            rho=None,
            timeout=False,
            error=f"{type(exc).__name__}: {exc}",
        )
    rho = None
    estimate = estimate_plan_count(
        case.n, len(case.operators.scans), len(case.operators.joins)
    )
    if check and case.n <= max_tables and estimate <= max_plans:
        rho, _ = check_guarantee(
            report, instance, operators=case.operators,
            max_tables=max_tables, max_plans=max_plans,
        )
    return RunMetrics(
        seed=case.seed,
        algorithm=spec.name,
        alpha=spec.alpha,
        n=case.n,
        l=case.l,
        wall_ms=report.wall * 1000.0,
        plans_total=report.plans_total,
        plans_max_set=report.plans_max_set,
        iterations=len(report.iterations),
        weighted_cost=report.chosen.weighted_cost,
        rho=rho,
        timeout=report.timed_out,
    )


def run_benchmark(
    suite: Sequence[TestCase],
    algorithms: Sequence[AlgorithmSpec] | None = None,
    *,
    deadline: float = 60.0,
    check_guarantees: bool = True,
    max_tables: int = DEFAULT_TABLE_CAP,
    max_plans: int = DEFAULT_PLAN_CAP,
    jobs: int = 1,
) -> list[RunMetrics]:
    """Execute every (case, algorithm) pair and collect one row per run.

    With ``algorithms`` given, every case runs under every algorithm in
    order (the cross product); otherwise each case runs under its own.
    Guarantees are verified against the oracle for cases within the
    enumeration caps.  A failing run contributes a row with its error
    recorded instead of aborting the suite.  ``jobs > 1`` fans runs out to
    worker processes; row order stays the suite order either way.
    """
    pairs = [
        (case, spec, deadline, check_guarantees, max_tables, max_plans)
        for case in suite
        for spec in (algorithms if algorithms is not None else (case.algorithm,))
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_pair, pairs))
    return [_run_pair(p) for p in pairs]
