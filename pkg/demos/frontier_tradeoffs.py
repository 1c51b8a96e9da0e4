"""Walk the exact Pareto frontier of a small join query.

Builds a four-table star query by hand, runs the exact multi-objective
search over run time, energy, and result completeness, prints every
non-dominated cost vector with its plan, and then shows how different
objective weightings pick different plans off the same frontier.
"""
from __future__ import annotations

from moqo import (
    Catalog,
    Objective,
    Predicate,
    ProblemInstance,
    Query,
    Table,
    exa_optimize,
    uniform_operator_space,
    weighted_cost,
)


def main() -> None:
    catalog = Catalog(
        [
            Table("orders", 120_000),
            Table("customer", 15_000, has_index=True),
            Table("part", 40_000, has_index=True),
            Table("supplier", 2_000),
        ]
    )
    query = Query(
        tables=("orders", "customer", "part", "supplier"),
        predicates=(
            Predicate("orders", "customer", 1e-4),
            Predicate("orders", "part", 5e-5),
            Predicate("orders", "supplier", 2e-4),
        ),
    )
    objectives = (Objective.TOTAL_TIME, Objective.ENERGY, Objective.TUPLE_LOSS)

    instance = ProblemInstance(
        catalog=catalog,
        query=query,
        objectives=objectives,
        weights=(1.0, 0.0, 0.0),
    )
    # three scan and three join configurations; the full default space works
    # too, it just yields a frontier too large to read as a table
    operators = uniform_operator_space(3)
    report = exa_optimize(instance, operators=operators)

    print(f"exact search stored {report.plans_total} plans across all table sets")
    print(f"frontier of the full query has {len(report.frontier)} plans:\n")
    header = "  ".join(f"{obj.value:>12}" for obj in objectives)
    print(f"{header}  plan")
    for cost, plan in sorted(report.frontier):
        cells = "  ".join(f"{value:12.4g}" for value in cost)
        print(f"{cells}  {plan}")

    print("\nthe same frontier serves any weighting after the fact:")
    for label, weights in [
        ("time only", (1.0, 0.0, 0.0)),
        ("energy only", (0.0, 1.0, 0.0)),
        ("completeness above all", (1.0, 0.0, 1e6)),
    ]:
        best_cost, best_plan = min(
            report.frontier, key=lambda entry: weighted_cost(entry[0], weights)
        )
        score = weighted_cost(best_cost, weights)
        print(f"  {label:<26} -> {best_plan}  (weighted cost {score:.4g})")


if __name__ == "__main__":
    main()
