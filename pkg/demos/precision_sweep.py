"""Trade result precision for search effort on a hard clique query.

A seven-table clique over six objectives is far beyond what the exact
search can finish in reasonable time, but the single-pass approximate
search handles it easily once a coarsening factor is allowed.  This demo
sweeps the factor and reports stored plans, runtime, and the weighted
cost of the returned plan, so you can watch the effort collapse while
the plan quality barely moves.
"""
from __future__ import annotations

import random
from dataclasses import replace

from moqo import Objective, ProblemInstance, generate_query, rta_optimize

SEED = 88


def main() -> None:
    rng = random.Random(SEED)
    catalog, query = generate_query("clique", 7, rng.getrandbits(32))
    objectives = tuple(rng.sample(tuple(Objective), 6))
    weights = tuple(rng.uniform(0.0, 1.0) for _ in range(6))
    instance = ProblemInstance(
        catalog=catalog, query=query, objectives=objectives, weights=weights
    )

    print("seven-table clique, objectives:")
    for objective, weight in zip(objectives, weights):
        print(f"  {objective.value:<18} weight {weight:.3f}")
    print()
    print(f"{'factor':>8}  {'stored plans':>12}  {'largest set':>11}  {'seconds':>8}  {'weighted cost':>14}")

    for alpha in (1.05, 1.15, 1.5, 2.0, 4.0):
        report = rta_optimize(replace(instance, alpha_user=alpha))
        print(
            f"{alpha:>8}  {report.plans_total:>12}  {report.plans_max_set:>11}"
            f"  {report.wall:>8.2f}  {report.chosen.weighted_cost:>14.6g}"
        )

    print()
    print("every returned plan is guaranteed within its factor of the true")
    print("weighted optimum; the exact search (factor 1) does not finish on")
    print("this instance in any comparable time budget.")


if __name__ == "__main__":
    main()
