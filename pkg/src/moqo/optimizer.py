"""Bottom-up multi-objective plan search.

One dynamic-programming core (`find_pareto_plans`) enumerates bushy join
trees over every table subset, in increasing subset size, pruning each
subset's candidate plans with a `PlanSet`.  Three drivers share that core
and differ only in three pluggable choices:

* the per-iteration precision formula (what set-level factor to aim for),
* the insertion test (the DP prunes at the |Q|-th root of that factor, so
  the factors multiply up to the set-level guarantee along any join tree),
* the termination rule (when the returned plan is good enough).

`exa_optimize` runs one exact pass (factor 1): the full-query set is the
true Pareto frontier and the selected plan is optimal.  `rta_optimize`
runs one approximate pass at the user's factor and guarantees a weighted
cost within that factor of the optimum on unbounded instances.
`ira_optimize` repeats approximate passes with a precision that decays
toward 1, and stops once no stored plan could beat the current choice by
more than the user's factor even after relaxing the bounds, which yields
the same factor-of-alpha guarantee on bounded instances.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .catalog import Catalog, PreparedQuery, Query
from .costs import (
    UNBOUNDED,
    Objective,
    validate_alpha,
    validate_bounds,
    validate_objectives,
    validate_weights,
)
from .errors import IterationLimitError, ScheduleUndefinedError
from .frontier import PlanSet, pareto_mask
from .plans import (
    CostModel,
    CostModelConfig,
    JoinKind,
    OperatorSpace,
    PlanRegistry,
    default_operator_space,
    serialize_plan,
)

__all__ = [
    "DEFAULT_ITERATION_CAP",
    "ProblemInstance",
    "ParetoSearch",
    "ChosenPlan",
    "IterationStats",
    "OptimizerReport",
    "find_pareto_plans",
    "select_best",
    "ira_precision",
    "exa_optimize",
    "rta_optimize",
    "ira_optimize",
]

DEFAULT_ITERATION_CAP = 64


@dataclass(frozen=True)
class ProblemInstance:
    """A weighted (optionally bounded) plan-search problem.

    ``weights`` scalarize the active objectives; ``bounds`` give per-objective
    upper limits (UNBOUNDED entries mean no limit; an empty tuple means all
    objectives are unbounded).  ``alpha_user`` is the approximation factor
    granted to the approximate algorithms; the exact algorithm ignores it.
    """

    catalog: Catalog
    query: Query
    objectives: tuple[Objective, ...]
    weights: tuple[float, ...]
    bounds: tuple[float, ...] = ()
    alpha_user: float = 1.0

    def __post_init__(self) -> None:
        objectives = validate_objectives(self.objectives)
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "weights", validate_weights(self.weights, len(objectives)))
        bounds = self.bounds or (UNBOUNDED,) * len(objectives)
        object.__setattr__(self, "bounds", validate_bounds(bounds, len(objectives)))
        object.__setattr__(self, "alpha_user", validate_alpha(self.alpha_user))

    @property
    def bounded(self) -> bool:
        return any(b != UNBOUNDED for b in self.bounds)


@dataclass
class ParetoSearch:
    """Result of one DP pass: per-table-set plan stores plus bookkeeping."""

    sets: dict[int, PlanSet]
    registry: PlanRegistry
    prepared: PreparedQuery
    model: CostModel
    alpha: float
    timed_out: bool
    candidates_generated: int
    wall: float

    @property
    def full_set(self) -> PlanSet:
        return self.sets[self.prepared.full_mask]

    def set_sizes(self) -> dict[tuple[str, ...], int]:
        return {
            self.prepared.names_of(mask): s.count for mask, s in sorted(self.sets.items())
        }

    def plans_total(self) -> int:
        return sum(s.count for s in self.sets.values())

    def plans_max_set(self) -> int:
        return max(s.count for s in self.sets.values())


def _inl_applicable(prepared: PreparedQuery, right_mask: int) -> bool:
    # inner side must be a single indexed base table (singleton sets hold
    # only base-table access paths by construction)
    return (right_mask & (right_mask - 1)) == 0 and prepared.indexed[right_mask.bit_length() - 1]


def _chunk_size(set_count: int, n_columns: int) -> int:
    if set_count <= 0:
        return 512
    return max(16, min(512, 2_000_000 // (set_count * n_columns + 1)))


def _best_member(planset: PlanSet, w_col: np.ndarray):
    if planset.count == 0:
        return None
    w = planset.costs @ w_col
    i = int(np.argmin(w))
    return (
        float(w[i]),
        planset.costs[i].copy(),
        float(planset.cards[i]),
        int(planset.plan_ids[i]),
    )


def find_pareto_plans(
    instance: ProblemInstance,
    *,
    alpha: float = 1.0,
    deadline: float | None = None,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    connected_only: bool = False,
) -> ParetoSearch:
    """Build dominance-pruned plan sets for every table subset of the query.

    ``alpha`` is the per-insertion approximation factor (1.0 keeps exact
    Pareto sets).  ``deadline`` is a duration in seconds; once it expires the
    search degrades gracefully: every table set not fully processed yet keeps
    only the single candidate minimizing the instance's weighted cost among
    those generated for it, so a (flagged) plan is still returned promptly.
    """
    t0 = time.monotonic()
    alpha = validate_alpha(alpha)
    operators = operators or default_operator_space()
    model = CostModel(instance.objectives, config)
    prepared = PreparedQuery(instance.catalog, instance.query)
    registry = PlanRegistry()
    w_col = model.pad_weights(instance.weights)
    deadline_at = None if deadline is None else t0 + float(deadline)
    n = prepared.n
    n_columns = model.n_columns
    sets: dict[int, PlanSet] = {}
    generated = 0
    timed_out = False

    for i in range(n):
        mask = 1 << i
        s = PlanSet(mask, n_columns, alpha)
        for op in operators.scans:
            out, cost = model.scan_cost(prepared.cards[i], op)
            generated += 1
            if s.admits(cost):
                rec = registry.add(
                    op,
                    None,
                    None,
                    mask,
                    out,
                    float(prepared.cards[i]),
                    tuple(cost),
                    table=instance.query.tables[i],
                    base_index=prepared.indexed[i],
                )
                s.insert(cost, out, rec.plan_id)
        sets[mask] = s

    masks = sorted(
        (m for m in range(1, prepared.full_mask + 1) if m.bit_count() >= 2),
        key=lambda m: (m.bit_count(), m),
    )
    for mask in masks:
        target = PlanSet(mask, n_columns, alpha)
        full_out = prepared.full_card(mask)
        best = None  # (weighted, cost row, sampled out_card, op, left id, right id)
        if not timed_out and deadline_at is not None and time.monotonic() >= deadline_at:
            timed_out = True
        if not timed_out:
            sub = (mask - 1) & mask
            while sub:
                m1, m2 = sub, mask ^ sub
                sub = (sub - 1) & mask
                s1, s2 = sets[m1], sets[m2]
                if s1.count == 0 or s2.count == 0:
                    continue
                if connected_only and not prepared.connected(m1, m2):
                    continue
                sigma = prepared.crossing(m1, m2)
                n2 = s2.count
                # every plan over a table set is costed with that set's
                # full-data cardinality; the per-plan sampled estimates in
                # `cards` only feed the descriptive out_card of records
                fc1 = np.full(s1.count, prepared.full_card(m1))
                fc2 = np.full(n2, prepared.full_card(m2))
                for op in operators.joins:
                    if op.kind is JoinKind.INDEX_NESTED_LOOP and not _inl_applicable(prepared, m2):
                        continue
                    _, cost_block = model.combine_block(op, s1.costs, fc1, s2.costs, fc2, sigma)
                    rows = cost_block.shape[0]
                    generated += rows
                    w_block = cost_block @ w_col
                    bi = int(np.argmin(w_block))
                    if best is None or w_block[bi] < best[0]:
                        i1, i2 = divmod(bi, n2)
                        best = (
                            float(w_block[bi]),
                            cost_block[bi].copy(),
                            float(s1.cards[i1] * s2.cards[i2] * sigma),
                            op,
                            int(s1.plan_ids[i1]),
                            int(s2.plan_ids[i2]),
                        )
                    start = 0
                    while start < rows:
                        if deadline_at is not None and time.monotonic() >= deadline_at:
                            timed_out = True
                            break
                        stop = min(rows, start + _chunk_size(target.count, n_columns))
                        admit = target.admits_mask(cost_block[start:stop])
                        for k in np.nonzero(admit)[0]:
                            row = start + int(k)
                            cost = cost_block[row]
                            if target.admits(cost):
                                i1, i2 = divmod(row, n2)
                                sampled = float(s1.cards[i1] * s2.cards[i2] * sigma)
                                rec = registry.add(
                                    op,
                                    int(s1.plan_ids[i1]),
                                    int(s2.plan_ids[i2]),
                                    mask,
                                    sampled,
                                    full_out,
                                    tuple(cost),
                                )
                                target.insert(cost, sampled, rec.plan_id)
                        start = stop
                    if timed_out:
                        break
                if timed_out:
                    break
        if timed_out:
            # degraded finish: this set keeps a single weighted-min candidate,
            # combining only the weighted-best member of each sub-set
            best, extra = _degraded_best(
                prepared, model, operators, sets, mask, w_col, best, connected_only
            )
            generated += extra
            target.clear()
            if best is not None:
                _, cost_row, out_card, op, lid, rid = best
                rec = registry.add(op, lid, rid, mask, out_card, full_out, tuple(cost_row))
                target.insert(cost_row, out_card, rec.plan_id)
        sets[mask] = target

    return ParetoSearch(
        sets=sets,
        registry=registry,
        prepared=prepared,
        model=model,
        alpha=alpha,
        timed_out=timed_out,
        candidates_generated=generated,
        wall=time.monotonic() - t0,
    )


def _degraded_best(
    prepared: PreparedQuery,
    model: CostModel,
    operators: OperatorSpace,
    sets: Mapping[int, PlanSet],
    mask: int,
    w_col: np.ndarray,
    seed,
    connected_only: bool,
):
    best = seed
    produced = 0
    sub = (mask - 1) & mask
    while sub:
        m1, m2 = sub, mask ^ sub
        sub = (sub - 1) & mask
        s1, s2 = sets[m1], sets[m2]
        if s1.count == 0 or s2.count == 0:
            continue
        if connected_only and not prepared.connected(m1, m2):
            continue
        b1 = _best_member(s1, w_col)
        b2 = _best_member(s2, w_col)
        sigma = prepared.crossing(m1, m2)
        for op in operators.joins:
            if op.kind is JoinKind.INDEX_NESTED_LOOP and not _inl_applicable(prepared, m2):
                continue
            _, cost = model.combine_block(
                op,
                b1[1].reshape(1, -1),
                np.array([prepared.full_card(m1)]),
                b2[1].reshape(1, -1),
                np.array([prepared.full_card(m2)]),
                sigma,
            )
            produced += 1
            wc = float(cost[0] @ w_col)
            if best is None or wc < best[0]:
                best = (wc, cost[0].copy(), float(b1[2] * b2[2] * sigma), op, b1[3], b2[3])
    return best, produced


def select_best(
    planset: PlanSet, weights: Sequence[float], bounds: Sequence[float]
) -> int:
    """Pick the plan id minimizing weighted cost among bound-respecting members.

    If no member respects the bounds, the minimum is taken over all members.
    Ties break by lexicographically smallest cost vector, then smallest id.
    """
    if planset.count == 0:
        raise ValueError("cannot select from an empty plan set")
    l = len(weights)
    costs = planset.costs[:, :l]
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bounds, dtype=np.float64)
    if b.shape[0] != l:
        raise ValueError("weights and bounds must cover the same objectives")
    wc = costs @ w
    ok = (costs <= b).all(axis=1)
    pool = np.nonzero(ok)[0] if ok.any() else np.arange(planset.count)
    best_w = wc[pool].min()
    tied = pool[wc[pool] == best_w]
    pick = min(tied, key=lambda i: (tuple(costs[i]), int(planset.plan_ids[i])))
    return int(planset.plan_ids[pick])


def ira_precision(iteration: int, alpha_user: float, n_objectives: int) -> float:
    """Precision aimed for by refinement iteration i: alpha_user^(2^(-i/(3l-3))).

    Strictly decreasing in i, bounded by alpha_user, and converging to 1.
    Undefined for a single objective (the exponent's denominator vanishes);
    single-objective instances belong to `exa_optimize`/`rta_optimize`.
    """
    if n_objectives < 2:
        raise ScheduleUndefinedError(
            "iterative refinement needs at least two objectives; "
            "use exa_optimize or rta_optimize for single-objective instances"
        )
    if iteration < 1:
        raise ValueError(f"iteration index starts at 1, got {iteration}")
    alpha_user = validate_alpha(alpha_user)
    return alpha_user ** (2.0 ** (-iteration / (3.0 * n_objectives - 3.0)))


@dataclass(frozen=True)
class ChosenPlan:
    plan_id: int
    plan: str
    cost: tuple[float, ...]
    weighted_cost: float
    within_bounds: bool


@dataclass(frozen=True)
class IterationStats:
    index: int
    alpha_set: float
    alpha_insert: float
    plans_total: int
    plans_max_set: int
    candidates: int
    wall: float
    timed_out: bool


@dataclass(frozen=True)
class OptimizerReport:
    """Everything an optimization run produced, selection plus diagnostics."""

    algorithm: str
    alpha: float
    objectives: tuple[Objective, ...]
    chosen: ChosenPlan
    frontier: tuple[tuple[tuple[float, ...], str], ...]
    set_sizes: Mapping[tuple[str, ...], int]
    plans_total: int
    plans_max_set: int
    iterations: tuple[IterationStats, ...]
    candidates_generated: int
    timed_out: bool
    wall: float


def _build_report(
    instance: ProblemInstance,
    search: ParetoSearch,
    chosen_id: int,
    algorithm: str,
    alpha: float,
    iterations: tuple[IterationStats, ...],
    candidates_total: int,
    wall: float,
) -> OptimizerReport:
    model = search.model
    registry = search.registry
    full = search.full_set
    # the reported frontier lives on the active objectives: project stored
    # members (which may carry an auxiliary column) and re-filter
    projected = sorted(
        (model.active(tuple(full.costs[i])), serialize_plan(registry, registry[int(pid)]))
        for i, pid in enumerate(full.plan_ids)
    )
    if projected:
        keep = pareto_mask(np.asarray([c for c, _ in projected]))
        frontier = [entry for entry, k in zip(projected, keep) if k]
    else:
        frontier = []
    record = registry[chosen_id]
    cost = model.active(record.cost)
    w = float(np.dot(np.asarray(cost), np.asarray(instance.weights)))
    within = all(c <= b for c, b in zip(cost, instance.bounds))
    chosen = ChosenPlan(
        plan_id=chosen_id,
        plan=serialize_plan(registry, record),
        cost=cost,
        weighted_cost=w,
        within_bounds=within,
    )
    return OptimizerReport(
        algorithm=algorithm,
        alpha=alpha,
        objectives=instance.objectives,
        chosen=chosen,
        frontier=tuple(frontier),
        set_sizes=search.set_sizes(),
        plans_total=search.plans_total(),
        plans_max_set=search.plans_max_set(),
        iterations=iterations,
        candidates_generated=candidates_total,
        timed_out=search.timed_out,
        wall=wall,
    )


def _drive(
    instance: ProblemInstance,
    algorithm: str,
    promised_alpha: float,
    schedule: Callable[[int], float],
    should_stop: Callable[[int, float, ParetoSearch], bool],
    deadline: float | None,
    max_iterations: int,
    **search_kw,
) -> OptimizerReport:
    """The shared refinement loop: precision, search, selection, stop test."""
    t0 = time.monotonic()
    deadline_at = None if deadline is None else t0 + float(deadline)
    n = len(instance.query)
    iterations: list[IterationStats] = []
    candidates = 0
    search = None
    chosen_id = -1
    for i in range(1, max_iterations + 1):
        alpha_set = schedule(i)
        alpha_insert = alpha_set ** (1.0 / n)
        remaining = None
        if deadline_at is not None:
            remaining = max(0.0, deadline_at - time.monotonic())
        search = find_pareto_plans(
            instance, alpha=alpha_insert, deadline=remaining, **search_kw
        )
        candidates += search.candidates_generated
        chosen_id = select_best(search.full_set, instance.weights, instance.bounds)
        iterations.append(
            IterationStats(
                index=i,
                alpha_set=alpha_set,
                alpha_insert=alpha_insert,
                plans_total=search.plans_total(),
                plans_max_set=search.plans_max_set(),
                candidates=search.candidates_generated,
                wall=search.wall,
                timed_out=search.timed_out,
            )
        )
        if search.timed_out:
            break  # degraded pass: return the flagged best effort
        if should_stop(i, alpha_set, search):
            break
    else:
        raise IterationLimitError(
            f"{algorithm} did not converge within {max_iterations} iterations"
        )
    return _build_report(
        instance,
        search,
        chosen_id,
        algorithm,
        promised_alpha,
        tuple(iterations),
        candidates,
        time.monotonic() - t0,
    )


def exa_optimize(
    instance: ProblemInstance,
    *,
    deadline: float | None = None,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    connected_only: bool = False,
) -> OptimizerReport:
    """Exact search: the frontier is the true Pareto set, the plan optimal."""
    return _drive(
        instance,
        "exa",
        1.0,
        schedule=lambda i: 1.0,
        should_stop=lambda i, a, s: True,
        deadline=deadline,
        max_iterations=1,
        operators=operators,
        config=config,
        connected_only=connected_only,
    )


def rta_optimize(
    instance: ProblemInstance,
    *,
    deadline: float | None = None,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    connected_only: bool = False,
) -> OptimizerReport:
    """One approximate pass: weighted cost within alpha_user of the optimum.

    Only for unbounded instances; the guarantee says nothing about bounds,
    so bounded instances must use `ira_optimize` (or `exa_optimize`).
    """
    if instance.bounded:
        raise ValueError(
            "rta_optimize handles unbounded instances only; "
            "use ira_optimize (or exa_optimize) when bounds are present"
        )
    return _drive(
        instance,
        "rta",
        instance.alpha_user,
        schedule=lambda i: instance.alpha_user,
        should_stop=lambda i, a, s: True,
        deadline=deadline,
        max_iterations=1,
        operators=operators,
        config=config,
        connected_only=connected_only,
    )


def _ira_should_stop(
    full: PlanSet,
    n_objectives: int,
    weights: Sequence[float],
    bounds: Sequence[float],
    alpha_set: float,
    alpha_user: float,
) -> bool:
    """No stored plan respects the relaxed bounds and would still beat the
    current selection by more than alpha_user once its own factor is paid.

    While some member respects the relaxed bounds but none respects the real
    bounds, the selection's guarantee is void (its weighted cost counts as
    infinite) and refinement must continue.
    """
    costs = full.costs[:, :n_objectives]
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bounds, dtype=np.float64)
    wc = costs @ w
    relaxed = (costs <= b * alpha_set).all(axis=1)
    if not relaxed.any():
        return True
    feasible = (costs <= b).all(axis=1)
    if not feasible.any():
        return False
    threshold = wc[feasible].min() / alpha_user
    return not bool((wc[relaxed] / alpha_set < threshold).any())


def ira_optimize(
    instance: ProblemInstance,
    *,
    deadline: float | None = None,
    max_iterations: int = DEFAULT_ITERATION_CAP,
    operators: OperatorSpace | None = None,
    config: CostModelConfig | None = None,
    connected_only: bool = False,
) -> OptimizerReport:
    """Iterative refinement for bounded instances.

    Repeats approximate passes at decaying precision until the stopping rule
    proves the selected plan is an alpha_user-approximate solution.  Hitting
    ``max_iterations`` raises `IterationLimitError`; it is never silently
    reported as success.
    """
    l = len(instance.objectives)
    if l < 2:
        # surface the schedule error eagerly, with the routing hint
        ira_precision(1, instance.alpha_user, l)
    return _drive(
        instance,
        "ira",
        instance.alpha_user,
        schedule=lambda i: ira_precision(i, instance.alpha_user, l),
        should_stop=lambda i, alpha_set, search: _ira_should_stop(
            search.full_set,
            l,
            instance.weights,
            instance.bounds,
            alpha_set,
            instance.alpha_user,
        ),
        deadline=deadline,
        max_iterations=max_iterations,
        operators=operators,
        config=config,
        connected_only=connected_only,
    )
