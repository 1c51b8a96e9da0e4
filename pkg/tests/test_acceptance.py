"""Acceptance gate: the formal guarantees, verified against brute force.

Each test here checks one advertised property of the engine end to end,
on seeded randomized workloads sized so a brute-force oracle can referee:

1.  the exact search returns the true Pareto frontier, bit for bit;
2.  a coarsened search covers every true Pareto vector within its factor;
3.  the single-pass optimizer's weighted cost stays within its factor;
4.  the bounded refinement honors bounds whenever any plan can, stays
    within its weighted factor, and always terminates within the cap;
5.  degrading both join operands by a factor never degrades the joined
    cost by more than that factor, for every operator configuration;
6.  plan-set pruning keeps stored members mutually non-dominated and at
    most one per log-grid bucket, and at factor 1 it maintains exactly
    the Pareto set of everything offered;
7.  plan enumeration hits the closed-form bushy count exactly;
8.  coarsening collapses storage and runtime on instances where the
    exact search is hopeless;
9.  single-objective searches store exactly one plan per table set;
10. benchmark metric exports are reproducible byte for byte.

Every test records one PASS/FAIL summary line (see conftest), so a full
run prints a ten-line verdict at the end.
"""
from __future__ import annotations

import json
import math
import random
import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from moqo.bench import SHAPES, AlgorithmSpec, Profile, generate_query, generate_testcase
from moqo.catalog import Catalog, PreparedQuery, Query, Table
from moqo.cli import main as cli_main
from moqo.costs import UNBOUNDED, Objective, relative_cost
from moqo.errors import IterationLimitError
from moqo.frontier import PlanSet, grid_bucket, pareto_mask
from moqo.optimizer import (
    DEFAULT_ITERATION_CAP,
    ProblemInstance,
    exa_optimize,
    find_pareto_plans,
    ira_optimize,
    rta_optimize,
)
from moqo.oracle import _cost_blocks, count_bushy, enumerate_all_plans, oracle_frontier
from moqo.plans import (
    CostModel,
    OperatorSpace,
    PlanRecord,
    ScanKind,
    ScanOp,
    default_operator_space,
    uniform_operator_space,
)

ALPHA_LEVELS = (1.15, 1.5, 2.0)
REL_TOL = 1e-9

# instance sizes paired with operator-space widths so that the brute-force
# oracle stays enumerable at desk scale: wider spaces on fewer tables
SIZE_CHOICES = ((2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2), (5, 1))


@dataclass(frozen=True)
class RefereedCase:
    """One seeded instance together with its brute-force frontier."""

    instance: ProblemInstance
    operators: OperatorSpace
    oracle: object
    n: int


_SUITE: list[RefereedCase] | None = None


def shared_suite() -> list[RefereedCase]:
    """200 seeded instances with oracle frontiers, built once per run."""
    global _SUITE
    if _SUITE is None:
        rng = random.Random(422025)
        cases = []
        for _ in range(200):
            n, j = SIZE_CHOICES[rng.randrange(len(SIZE_CHOICES))]
            shape = SHAPES[rng.randrange(len(SHAPES))]
            catalog, query = generate_query(shape, n, rng.getrandbits(32))
            l = rng.randint(2, 3)
            objectives = tuple(rng.sample(tuple(Objective), l))
            weights = tuple(rng.uniform(0.0, 1.0) for _ in range(l))
            operators = uniform_operator_space(j)
            instance = ProblemInstance(
                catalog=catalog, query=query, objectives=objectives, weights=weights
            )
            oracle = oracle_frontier(catalog, query, objectives, operators=operators)
            cases.append(RefereedCase(instance, operators, oracle, n))
        _SUITE = cases
    return _SUITE


def test_exact_search_frontier_equals_brute_force_pareto(record_verdict):
    started = time.monotonic()
    mismatches = 0
    for case in shared_suite():
        report = exa_optimize(case.instance, operators=case.operators)
        engine = {cost for cost, _ in report.frontier}
        reference = {tuple(float(x) for x in c) for c in case.oracle.costs()}
        if engine != reference:
            mismatches += 1
    elapsed = time.monotonic() - started
    detail = f"{len(shared_suite())} instances, {mismatches} frontier mismatches, {elapsed:.1f}s"
    record_verdict("exact frontier equals oracle", mismatches == 0 and elapsed < 120.0, detail)
    assert mismatches == 0
    assert elapsed < 120.0


def test_coarsened_search_covers_every_pareto_vector_within_factor(record_verdict):
    violations = 0
    checked = 0
    for case in shared_suite():
        reference = case.oracle.plans.costs
        for alpha_u in ALPHA_LEVELS:
            alpha_i = alpha_u ** (1.0 / case.n)
            factor = alpha_i ** case.n
            search = find_pareto_plans(case.instance, alpha=alpha_i, operators=case.operators)
            stored = search.full_set.costs[:, : len(case.instance.objectives)]
            covered = (
                (stored[None, :, :] <= reference[:, None, :] * factor + 1e-9)
                .all(axis=2)
                .any(axis=1)
            )
            violations += int(np.count_nonzero(~covered))
            checked += reference.shape[0]
    detail = f"{checked} pareto vectors x {len(ALPHA_LEVELS)} factors, {violations} uncovered"
    record_verdict("approximate frontier coverage", violations == 0, detail)
    assert violations == 0


def test_single_pass_plan_stays_within_promised_weighted_factor(record_verdict):
    violations = 0
    runs = 0
    worst = 0.0
    for case in shared_suite():
        optimum, _ = case.oracle.constrained_optimum(
            case.instance.weights, case.instance.bounds
        )
        for alpha_u in ALPHA_LEVELS:
            report = rta_optimize(
                replace(case.instance, alpha_user=alpha_u), operators=case.operators
            )
            rho = relative_cost(
                report.chosen.cost,
                case.instance.weights,
                case.instance.bounds,
                optimum,
                feasible_exists=True,
            )
            worst = max(worst, rho / alpha_u)
            runs += 1
            if rho > alpha_u * (1.0 + REL_TOL):
                violations += 1
    detail = f"{runs} runs, {violations} factor violations, worst rho/alpha {worst:.6f}"
    record_verdict("single-pass weighted guarantee", violations == 0, detail)
    assert violations == 0


def test_bounded_refinement_meets_bounds_and_weighted_factor(record_verdict):
    rng = random.Random(77023)
    feasibility_misses = 0
    cost_violations = 0
    termination_failures = 0
    feasible_count = 0
    for i in range(200):
        n, j = SIZE_CHOICES[rng.randrange(len(SIZE_CHOICES))]
        profile = Profile(
            n=(n, n),
            l=(2, 3),
            operators=j,
            bounded=True,
            alphas=ALPHA_LEVELS,
            algorithms=(AlgorithmSpec("ira", 1.5),),
        )
        case = generate_testcase(10_000 + i, profile)
        try:
            report = ira_optimize(case.instance(), operators=case.operators)
        except IterationLimitError:
            termination_failures += 1
            continue
        assert len(report.iterations) <= DEFAULT_ITERATION_CAP
        oracle = oracle_frontier(
            case.catalog, case.query, case.objectives, operators=case.operators
        )
        optimum, feasible = oracle.constrained_optimum(case.weights, case.bounds)
        if feasible:
            feasible_count += 1
            if not report.chosen.within_bounds:
                feasibility_misses += 1
        rho = relative_cost(
            report.chosen.cost,
            case.weights,
            case.bounds,
            optimum,
            feasible_exists=feasible,
        )
        if rho > case.alpha_user * (1.0 + REL_TOL):
            cost_violations += 1
    detail = (
        f"200 bounded instances ({feasible_count} feasible), "
        f"{feasibility_misses} bound misses, {cost_violations} factor violations, "
        f"{termination_failures} cap blowouts"
    )
    passed = feasibility_misses == 0 and cost_violations == 0 and termination_failures == 0
    record_verdict("bounded refinement guarantee", passed, detail)
    assert feasibility_misses == 0
    assert cost_violations == 0
    assert termination_failures == 0


def test_join_cost_formulas_scale_subplan_degradation_boundedly(record_verdict):
    rng = np.random.default_rng(550)
    model = CostModel(tuple(Objective))
    loss_col = list(model.columns).index(Objective.TUPLE_LOSS)

    def draw_block(size: int) -> np.ndarray:
        block = 10.0 ** rng.uniform(-2.0, 5.0, size=(size, model.n_columns))
        block[:, loss_col] = rng.uniform(0.0, 1.0, size)
        block[rng.random((size, model.n_columns)) < 0.05] = 0.0
        return block

    violations = 0
    trials_per_op = 0
    for op in default_operator_space().joins:
        trials_per_op = 0
        for _ in range(10):
            costs_l, costs_r = draw_block(100), draw_block(100)
            cards_l = 10.0 ** rng.uniform(0.0, 6.0, 100)
            cards_r = 10.0 ** rng.uniform(0.0, 6.0, 100)
            sigma = float(10.0 ** rng.uniform(-4.0, 0.0))
            alpha = float(rng.choice((1.15, 1.5, 2.0, 1.0 + 2.0 * rng.random())))
            _, base = model.combine_block(op, costs_l, cards_l, costs_r, cards_r, sigma)
            _, scaled = model.combine_block(
                op, alpha * costs_l, cards_l, alpha * costs_r, cards_r, sigma
            )
            violations += int(
                np.count_nonzero(scaled > alpha * base * (1.0 + REL_TOL) + 1e-12)
            )
            trials_per_op += base.shape[0]

    # result completeness has its own scalar combinator; sweep it on a grid
    a = np.linspace(0.0, 1.0, 100)[:, None, None]
    b = np.linspace(0.0, 1.0, 100)[None, :, None]
    alpha = np.linspace(1.0, 2.0, 10)[None, None, :]
    lhs = 1.0 - (1.0 - alpha * a) * (1.0 - alpha * b)
    rhs = alpha * (1.0 - (1.0 - a) * (1.0 - b))
    grid_violations = int(np.count_nonzero(lhs > rhs * (1.0 + REL_TOL) + 1e-12))

    detail = (
        f"{trials_per_op} trials x {len(default_operator_space().joins)} operators, "
        f"{violations} scaling violations; loss grid 100x100x10, {grid_violations} violations"
    )
    record_verdict("bounded per-operator scaling", violations + grid_violations == 0, detail)
    assert violations == 0
    assert grid_violations == 0


def _synthetic_record(mask: int, cost: tuple[float, ...], ident: int) -> PlanRecord:
    return PlanRecord(
        plan_id=ident,
        op=ScanOp(ScanKind.FULL),
        left=None,
        right=None,
        tables=mask,
        table="T1",
        base_index=False,
        out_card=1.0,
        full_card=1.0,
        cost=cost,
    )


def test_plan_set_pruning_invariants_hold_under_random_insertions(record_verdict):
    rng = np.random.default_rng(31337)
    dominance_breaks = 0
    bucket_collisions = 0
    operations = 0
    ident = 0
    while operations < 100_000:
        n_cols = int(rng.integers(2, 5))
        alpha = float(rng.choice((1.0, 1.15, 1.5, 2.0)))
        planset = PlanSet(0b1, n_cols, alpha=alpha)
        offered: list[np.ndarray] = []
        for _ in range(int(rng.integers(60, 160))):
            roll = rng.random()
            if offered and roll < 0.10:
                vec = offered[int(rng.integers(len(offered)))].copy()
            elif offered and roll < 0.30:
                vec = offered[int(rng.integers(len(offered)))] * 0.8
            else:
                vec = 10.0 ** rng.uniform(-1.0, 3.0, n_cols)
                vec[rng.random(n_cols) < 0.05] = 0.0
            offered.append(vec)
            planset.prune(_synthetic_record(0b1, tuple(vec), ident))
            ident += 1
            operations += 1

            stored = planset.costs
            le = (stored[:, None, :] <= stored[None, :, :]).all(axis=2)
            np.fill_diagonal(le, False)
            if le.any():
                dominance_breaks += 1
            if alpha > 1.0:
                buckets = [grid_bucket(row, alpha) for row in stored]
                if len(set(buckets)) != len(buckets):
                    bucket_collisions += 1

    sequence_mismatches = 0
    for _ in range(1_000):
        n_cols = int(rng.integers(2, 4))
        count = int(rng.integers(20, 80))
        vectors = 10.0 ** rng.uniform(-1.0, 2.0, (count, n_cols))
        duplicate = rng.random(count) < 0.15
        vectors[duplicate] = vectors[int(rng.integers(count))]
        planset = PlanSet(0b1, n_cols, alpha=1.0)
        for row in vectors:
            planset.prune(_synthetic_record(0b1, tuple(row), ident))
            ident += 1
        reference = vectors[pareto_mask(vectors)]
        got = sorted(map(tuple, planset.costs))
        if got != sorted(map(tuple, reference)):
            sequence_mismatches += 1

    detail = (
        f"{operations} pruning operations, {dominance_breaks} dominance breaks, "
        f"{bucket_collisions} bucket collisions; 1000 sequences, "
        f"{sequence_mismatches} exact-set mismatches"
    )
    passed = dominance_breaks == 0 and bucket_collisions == 0 and sequence_mismatches == 0
    record_verdict("pruning invariants", passed, detail)
    assert dominance_breaks == 0
    assert bucket_collisions == 0
    assert sequence_mismatches == 0


def test_enumerated_plan_counts_match_closed_form(record_verdict):
    assert count_bushy(1, 3) == 12
    assert count_bushy(2, 3) == 384
    model = CostModel((Objective.TOTAL_TIME, Objective.ENERGY))
    checked = []
    mismatches = 0
    for j in (1, 2, 3):
        operators = uniform_operator_space(j)
        for n in (1, 2, 3, 4, 5):
            names = tuple(f"T{i+1}" for i in range(n))
            catalog = Catalog([Table(name, 40 + 11 * i) for i, name in enumerate(names)])
            query = Query(names)
            expected = count_bushy(j, n)
            prepared = PreparedQuery(catalog, query)
            streamed = sum(
                block.shape[0] for block in _cost_blocks(prepared, model, operators)
            )
            if streamed != expected:
                mismatches += 1
            if expected <= 20_000:
                generated = sum(
                    1
                    for _ in enumerate_all_plans(
                        catalog, query, ("total_time",), operators=operators
                    )
                )
                if generated != expected:
                    mismatches += 1
            checked.append((j, n, expected))
    largest = max(c[2] for c in checked)
    detail = f"{len(checked)} space sizes up to {largest} plans, {mismatches} count mismatches"
    record_verdict("plan count formula", mismatches == 0, detail)
    assert mismatches == 0


def _trend_instance(seed: int, n: int, l: int) -> ProblemInstance:
    rng = random.Random(seed)
    catalog, query = generate_query("clique", n, rng.getrandbits(32))
    objectives = tuple(rng.sample(tuple(Objective), l))
    weights = tuple(rng.uniform(0.0, 1.0) for _ in range(l))
    return ProblemInstance(
        catalog=catalog, query=query, objectives=objectives, weights=weights
    )


def test_coarsening_cuts_storage_and_runtime_on_large_instances(record_verdict):
    # headline contrast: a seven-table clique over six objectives is out of
    # reach for the exact search but quick for the coarsened single pass
    big = _trend_instance(88, n=7, l=6)
    rta = rta_optimize(replace(big, alpha_user=1.5), deadline=60.0)
    exa = exa_optimize(big, deadline=60.0)
    contrast_ok = (
        rta.wall < 5.0
        and not rta.timed_out
        and (exa.timed_out or exa.wall >= 100.0 * rta.wall)
    )

    # storage trend: on instances every setting can finish, stored plans
    # shrink monotonically as the factor coarsens
    labels = ("exact", "1.15", "1.5", "2.0")
    totals: dict[str, list[int]] = {label: [] for label in labels}
    maxima: dict[str, list[int]] = {label: [] for label in labels}
    for seed in range(50):
        instance = _trend_instance(7_700 + seed, n=5, l=4)
        for label in labels:
            if label == "exact":
                report = exa_optimize(instance, deadline=60.0)
            else:
                report = rta_optimize(
                    replace(instance, alpha_user=float(label)), deadline=60.0
                )
            totals[label].append(report.plans_total)
            maxima[label].append(report.plans_max_set)
    med_total = [statistics.median(totals[label]) for label in labels]
    med_max = [statistics.median(maxima[label]) for label in labels]
    trend_ok = all(a >= b for a, b in zip(med_total, med_total[1:])) and all(
        a >= b for a, b in zip(med_max, med_max[1:])
    )

    detail = (
        f"single pass {rta.wall:.2f}s vs exact "
        f"{'deadline' if exa.timed_out else f'{exa.wall:.1f}s'}; "
        f"median stored plans {med_total}, median largest set {med_max}"
    )
    record_verdict("scalability trend", contrast_ok and trend_ok, detail)
    assert rta.wall < 5.0
    assert not rta.timed_out
    assert exa.timed_out or exa.wall >= 100.0 * rta.wall
    assert med_total == sorted(med_total, reverse=True)
    assert med_max == sorted(med_max, reverse=True)


def test_single_objective_search_stores_one_plan_per_table_set(record_verdict):
    oversized = 0
    runs = 0
    for case in shared_suite():
        for objective in case.instance.objectives:
            if objective is Objective.STARTUP_TIME:
                # startup costing reads operand totals, so its search state
                # is two-dimensional by construction; see the project notes
                continue
            single = ProblemInstance(
                catalog=case.instance.catalog,
                query=case.instance.query,
                objectives=(objective,),
                weights=(1.0,),
            )
            report = exa_optimize(single, operators=case.operators)
            runs += 1
            if report.plans_max_set != 1:
                oversized += 1
    detail = f"{runs} single-objective runs, {oversized} with a set above one plan"
    record_verdict("single-objective collapse", oversized == 0, detail)
    assert oversized == 0


def test_benchmark_metric_reruns_are_byte_identical(record_verdict, tmp_path):
    profile = {
        "n": [2, 3],
        "l": [2, 2],
        "bounded": True,
        "alphas": [1.5],
        "algorithms": ["exa", "ira(1.5)"],
        "deadline": 30.0,
    }
    profile_path = tmp_path / "profile.json"
    profile_path.write_text(json.dumps(profile))
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    base = ["bench", "--profile", str(profile_path), "--seeds", "0..9", "--no-timing"]
    assert cli_main(base + ["--out", str(first)]) == 0
    assert cli_main(base + ["--out", str(second)]) == 0
    identical = first.read_bytes() == second.read_bytes()
    rows = first.read_text().splitlines()
    detail = f"{len(rows) - 1} metric rows, reruns {'identical' if identical else 'diverged'}"
    record_verdict("benchmark determinism", identical, detail)
    assert identical
    assert rows[0].startswith("seed,algorithm,alpha")
    assert len(rows) == 21
