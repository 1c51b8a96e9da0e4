"""Exhaustive plan enumeration: the ground truth the search is checked against.

The oracle applies no dominance pruning while it enumerates; every bushy
join tree over every operator assignment contributes a cost vector.  Its
independence from the engine is at the search level: costs are computed by
the same kernels (`CostModel`), because the guarantees under test quantify
over plan selection, not over cost arithmetic.  Using the same arithmetic
also makes exact float comparisons between engine and oracle meaningful.

Enumeration is factorial.  `count_bushy` gives the closed-form plan count;
callers get a refusal (`EnumerationLimitError`) instead of an accidental
multi-hour loop when a query exceeds the configured caps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .catalog import Catalog, PreparedQuery, Query
from .costs import Objective, relative_cost
from .errors import EnumerationLimitError
from .frontier import PlanSet
from .plans import (
    CostModel,
    CostModelConfig,
    JoinKind,
    OperatorSpace,
    PlanRecord,
    PlanRegistry,
    default_operator_space,
    inl_applicable,
    scan_plan,
)

__all__ = [
    "DEFAULT_TABLE_CAP",
    "DEFAULT_PLAN_CAP",
    "count_bushy",
    "estimate_plan_count",
    "enumerate_all_plans",
    "OracleFrontier",
    "oracle_frontier",
    "true_pareto",
    "check_guarantee",
]

DEFAULT_TABLE_CAP = 6
DEFAULT_PLAN_CAP = 50_000_000


def count_bushy(j: int, n: int) -> int:
    """Bushy plans joining n tables with j operator configurations per node.

    The closed form is j^(2n-1) * (2(n-1))! / (n-1)!: a bushy tree over n
    leaves has n-1 joins and n scans, hence 2n-1 operator choices, and the
    unordered-leaf tree shapes multiply to the factorial ratio.
    """
    if j < 1 or n < 1:
        raise ValueError(f"need j >= 1 and n >= 1, got j={j}, n={n}")
    return j ** (2 * n - 1) * math.factorial(2 * (n - 1)) // math.factorial(n - 1)


def estimate_plan_count(n: int, n_scans: int, n_joins: int) -> int:
    """Exact plan count for n tables ignoring applicability restrictions.

    Equals `count_bushy(j, n)` when ``n_scans == n_joins == j``; with the
    default operator space it upper-bounds the true count (index nested
    loop drops out wherever the inner side is not an indexed base table).
    """
    per_size = [0] * (n + 1)
    per_size[1] = n_scans
    for s in range(2, n + 1):
        per_size[s] = sum(
            math.comb(s, a) * per_size[a] * per_size[s - a] * n_joins
            for a in range(1, s)
        )
    return per_size[n]


def _check_caps(
    prepared: PreparedQuery,
    operators: OperatorSpace,
    max_tables: int,
    max_plans: int,
) -> None:
    n = prepared.n
    estimate = estimate_plan_count(n, len(operators.scans), len(operators.joins))
    if n > max_tables or estimate > max_plans:
        raise EnumerationLimitError(
            f"refusing to enumerate {n} tables under "
            f"{len(operators.scans)} scan and {len(operators.joins)} join "
            f"configurations: up to {estimate} plans "
            f"(caps: {max_tables} tables, {max_plans} plans)"
        )


def _masks_by_size(n: int) -> list[list[int]]:
    by_size: list[list[int]] = [[] for _ in range(n + 1)]
    for mask in range(1, 1 << n):
        by_size[mask.bit_count()].append(mask)
    return by_size


def enumerate_all_plans(
    catalog: Catalog,
    query: Query,
    objectives: Sequence[Objective | str] = (Objective.TOTAL_TIME,),
    *,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    max_tables: int = DEFAULT_TABLE_CAP,
    max_plans: int = DEFAULT_PLAN_CAP,
) -> Iterator[PlanRecord]:
    """Yield every bushy plan over the full query exactly once.

    Operator applicability is honored (index nested loop needs an indexed
    base-table inner side), so counts can fall below `count_bushy` under the
    default operator space.  Sub-plan lists are memoized per table subset;
    the generator yields only full-query plans.
    """
    operators = operators or default_operator_space()
    prepared = PreparedQuery(catalog, query)
    _check_caps(prepared, operators, max_tables, max_plans)
    model = CostModel(objectives, config)
    registry = PlanRegistry()
    n = prepared.n

    store: dict[int, list[PlanRecord]] = {}
    for i, name in enumerate(query.tables):
        mask = 1 << i
        store[mask] = [
            scan_plan(
                model,
                registry,
                name,
                prepared.cards[i],
                op,
                mask=mask,
                has_index=prepared.indexed[i],
            )
            for op in operators.scans
        ]

    def plans_for(mask: int) -> Iterator[PlanRecord]:
        sub = (mask - 1) & mask
        while sub:
            m1, m2 = sub, mask ^ sub
            sub = (sub - 1) & mask
            sigma = prepared.crossing(m1, m2)
            # cost with the canonical per-table-set cardinalities, exactly
            # as the engine does, so cost vectors agree bitwise
            fc_l = prepared.full_card(m1)
            fc_r = prepared.full_card(m2)
            full = prepared.full_card(mask)
            for left in store[m1]:
                for right in store[m2]:
                    for op in operators.joins:
                        if op.kind is JoinKind.INDEX_NESTED_LOOP and not inl_applicable(right):
                            continue
                        _, cost = model.combine_cost(op, left.cost, fc_l, right.cost, fc_r, sigma)
                        yield registry.add(
                            op,
                            left.plan_id,
                            right.plan_id,
                            mask,
                            left.out_card * right.out_card * sigma,
                            full,
                            tuple(cost),
                        )

    by_size = _masks_by_size(n)
    for size in range(2, n):
        for mask in by_size[size]:
            store[mask] = list(plans_for(mask))

    if n == 1:
        yield from store[prepared.full_mask]
    else:
        yield from plans_for(prepared.full_mask)


@dataclass(frozen=True)
class OracleFrontier:
    """True Pareto frontier over the active objectives, plus the plan count."""

    plans: PlanSet
    n_plans: int

    def costs(self) -> set[tuple[float, ...]]:
        return {tuple(self.plans.costs[i]) for i in range(self.plans.count)}

    def minima(self) -> tuple[float, ...]:
        """Per-objective minimum over all plans (attained on the frontier)."""
        return tuple(float(x) for x in self.plans.costs.min(axis=0))

    def constrained_optimum(
        self, weights: Sequence[float], bounds: Sequence[float]
    ) -> tuple[tuple[float, ...], bool]:
        """Weighted-cost-minimal cost vector among bound-respecting plans,
        and whether any plan respects the bounds; falls back to all plans
        when none does.

        Both minima are attained on the frontier: any plan is weakly
        dominated by a frontier member, which is then no more expensive and
        no less feasible.
        """
        costs = self.plans.costs
        w = np.asarray(weights, dtype=np.float64)
        b = np.asarray(bounds, dtype=np.float64)
        wc = costs @ w
        ok = (costs <= b).all(axis=1)
        feasible_exists = bool(ok.any())
        pool = np.nonzero(ok)[0] if feasible_exists else np.arange(costs.shape[0])
        best = pool[int(np.argmin(wc[pool]))]
        return tuple(float(x) for x in costs[best]), feasible_exists


def _cost_blocks(
    prepared: PreparedQuery,
    model: CostModel,
    operators: OperatorSpace,
) -> Iterator[np.ndarray]:
    """Stream cost blocks covering every full-query plan once.

    Joins are costed with the per-table-set full-data cardinalities, exactly
    as the engine does, so cost vectors agree bitwise.  Sub-query cost
    arrays are materialized per table subset (no pruning); only the top
    level streams, which keeps peak memory at the size of the largest
    sub-subset array instead of the full plan count.
    """
    n = prepared.n
    store: dict[int, np.ndarray] = {}
    for i in range(n):
        rows = [model.scan_cost(prepared.cards[i], op) for op in operators.scans]
        store[1 << i] = np.array([r[1] for r in rows], dtype=np.float64)

    if n == 1:
        yield store[prepared.full_mask]
        return

    def split_blocks(mask: int) -> Iterator[np.ndarray]:
        sub = (mask - 1) & mask
        while sub:
            m1, m2 = sub, mask ^ sub
            sub = (sub - 1) & mask
            costs_l, costs_r = store[m1], store[m2]
            fc_l = np.full(costs_l.shape[0], prepared.full_card(m1))
            fc_r = np.full(costs_r.shape[0], prepared.full_card(m2))
            sigma = prepared.crossing(m1, m2)
            inner_scan_indexed = (m2 & (m2 - 1)) == 0 and prepared.indexed[
                m2.bit_length() - 1
            ]
            for op in operators.joins:
                if op.kind is JoinKind.INDEX_NESTED_LOOP and not inner_scan_indexed:
                    continue
                yield model.combine_block(op, costs_l, fc_l, costs_r, fc_r, sigma)[1]

    by_size = _masks_by_size(n)
    for size in range(2, n):
        for mask in by_size[size]:
            store[mask] = np.concatenate([part for part in split_blocks(mask)])
    yield from split_blocks(prepared.full_mask)


def oracle_frontier(
    catalog: Catalog,
    query: Query,
    objectives: Sequence[Objective | str],
    *,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    max_tables: int = DEFAULT_TABLE_CAP,
    max_plans: int = DEFAULT_PLAN_CAP,
) -> OracleFrontier:
    """Enumerate every full-query plan and keep the exact Pareto frontier.

    The frontier is computed over the active objectives (auxiliary cost
    columns are used for combination, then dropped before filtering).
    """
    operators = operators or default_operator_space()
    prepared = PreparedQuery(catalog, query)
    _check_caps(prepared, operators, max_tables, max_plans)
    model = CostModel(objectives, config)
    n_active = model.n_objectives
    full_out = prepared.full_card(prepared.full_mask)
    frontier = PlanSet(prepared.full_mask, n_active, alpha=1.0)
    total = 0
    for costs in _cost_blocks(prepared, model, operators):
        rows = costs.shape[0]
        active = costs[:, :n_active]
        start = 0
        while start < rows:
            stop = min(rows, start + 4096)
            chunk = active[start:stop]
            admit = frontier.admits_mask(chunk)
            for k in np.nonzero(admit)[0]:
                row = start + int(k)
                cost = active[row]
                if frontier.admits(cost):
                    frontier.insert(cost, full_out, total + row)
            start = stop
        total += rows
    return OracleFrontier(frontier, total)


def true_pareto(
    catalog: Catalog,
    query: Query,
    objectives: Sequence[Objective | str],
    **kwargs,
) -> PlanSet:
    """The exact Pareto frontier of all enumerable plans, as a plan set."""
    return oracle_frontier(catalog, query, objectives, **kwargs).plans


def check_guarantee(
    report,
    instance,
    *,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    max_tables: int = DEFAULT_TABLE_CAP,
    max_plans: int = DEFAULT_PLAN_CAP,
    rel_tol: float = 1e-9,
) -> tuple[float, bool]:
    """Relative cost of a report's chosen plan against the brute-force optimum.

    Returns ``(rho, passed)``: rho is the plan's weighted cost over the
    constrained optimum's, infinite for a bound violator while feasible
    plans exist; passed checks rho against the instance's approximation
    factor with a small relative slack for float noise.
    """
    frontier = oracle_frontier(
        instance.catalog,
        instance.query,
        instance.objectives,
        operators=operators,
        config=config,
        max_tables=max_tables,
        max_plans=max_plans,
    )
    opt_cost, feasible_exists = frontier.constrained_optimum(
        instance.weights, instance.bounds
    )
    rho = relative_cost(
        report.chosen.cost,
        instance.weights,
        instance.bounds,
        opt_cost,
        feasible_exists=feasible_exists,
    )
    passed = rho <= instance.alpha_user * (1.0 + rel_tol)
    return rho, passed
