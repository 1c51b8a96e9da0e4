"""Cost vectors, dominance relations, and weighted-cost scalarization.

A plan's quality is a vector of non-negative cost entries, one per active
objective.  All objectives are minimized.  Three comparison relations drive
plan pruning:

* ``dominates(c1, c2)``: c1 is at least as good as c2 in every objective.
* ``strictly_dominates(c1, c2)``: dominates and differs somewhere.
* ``approx_dominates(c1, c2, alpha)``: c1 is within factor ``alpha`` of
  dominating c2, i.e. ``c1[o] <= c2[o] * alpha`` for every objective.

A weight vector turns a cost vector into a scalar via a non-negative linear
combination; a bound vector marks per-objective upper limits, where
``UNBOUNDED`` (IEEE +inf) means "no limit" and survives relaxation by any
finite factor, which is why infinity is used rather than a large number.
"""
from __future__ import annotations

import math
import warnings
from enum import Enum
from typing import Sequence

from .errors import MismatchedObjectivesError

__all__ = [
    "Objective",
    "UNBOUNDED",
    "DegenerateInstanceWarning",
    "validate_objectives",
    "validate_cost",
    "validate_weights",
    "validate_bounds",
    "validate_alpha",
    "dominates",
    "strictly_dominates",
    "approx_dominates",
    "weighted_cost",
    "respects_bounds",
    "relative_cost",
]

UNBOUNDED = math.inf


class Objective(str, Enum):
    """The cost objectives the synthetic model can produce."""

    TOTAL_TIME = "total_time"
    STARTUP_TIME = "startup_time"
    CPU_LOAD = "cpu_load"
    IO_LOAD = "io_load"
    CORES = "cores"
    DISC_FOOTPRINT = "disc_footprint"
    BUFFER_FOOTPRINT = "buffer_footprint"
    ENERGY = "energy"
    TUPLE_LOSS = "tuple_loss"

    def __str__(self) -> str:  # used in CSV headers and error messages
        return self.value


class DegenerateInstanceWarning(RuntimeWarning):
    """A relative cost was requested against a zero-cost optimum."""


def validate_objectives(objectives: Sequence[Objective | str]) -> tuple[Objective, ...]:
    """Normalize and check an active-objective list (1..9 distinct kinds)."""
    objs = tuple(Objective(o) for o in objectives)
    if not objs:
        raise ValueError("at least one objective is required")
    if len(set(objs)) != len(objs):
        raise ValueError(f"duplicate objectives in {objs}")
    return objs


def _check_same_length(c1: Sequence[float], c2: Sequence[float]) -> None:
    if len(c1) != len(c2):
        raise MismatchedObjectivesError(
            f"cost vectors have different objective counts: {len(c1)} vs {len(c2)}"
        )


def validate_cost(cost: Sequence[float], objectives: Sequence[Objective] | None = None) -> tuple[float, ...]:
    """Check a cost vector: finite, non-negative, tuple_loss in [0, 1]."""
    entries = tuple(float(x) for x in cost)
    if objectives is not None:
        _check_same_length(entries, objectives)
    for i, x in enumerate(entries):
        if not math.isfinite(x) or x < 0.0:
            raise ValueError(f"cost entry {i} must be a finite non-negative real, got {x}")
        if objectives is not None and objectives[i] is Objective.TUPLE_LOSS and x > 1.0:
            raise ValueError(f"tuple_loss entry must lie in [0, 1], got {x}")
    return entries


def validate_weights(weights: Sequence[float], n_objectives: int | None = None) -> tuple[float, ...]:
    """Check a weight vector: non-negative with at least one positive entry."""
    entries = tuple(float(x) for x in weights)
    if n_objectives is not None and len(entries) != n_objectives:
        raise MismatchedObjectivesError(
            f"weight vector has {len(entries)} entries, expected {n_objectives}"
        )
    if any(not math.isfinite(x) or x < 0.0 for x in entries):
        raise ValueError(f"weights must be finite and non-negative, got {entries}")
    if not any(x > 0.0 for x in entries):
        raise ValueError("at least one weight must be positive")
    return entries


def validate_bounds(bounds: Sequence[float], n_objectives: int | None = None) -> tuple[float, ...]:
    """Check a bound vector: entries are non-negative reals or UNBOUNDED."""
    entries = tuple(float(x) for x in bounds)
    if n_objectives is not None and len(entries) != n_objectives:
        raise MismatchedObjectivesError(
            f"bound vector has {len(entries)} entries, expected {n_objectives}"
        )
    for i, x in enumerate(entries):
        if math.isnan(x) or x < 0.0:
            raise ValueError(f"bound entry {i} must be non-negative or UNBOUNDED, got {x}")
    return entries


def validate_alpha(alpha: float) -> float:
    """Check an approximation factor (alpha >= 1)."""
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 1.0:
        raise ValueError(f"approximation factor must be a finite real >= 1, got {alpha}")
    return alpha


def dominates(c1: Sequence[float], c2: Sequence[float]) -> bool:
    """True iff c1 is at least as good as c2 in every objective."""
    _check_same_length(c1, c2)
    return all(a <= b for a, b in zip(c1, c2))


def strictly_dominates(c1: Sequence[float], c2: Sequence[float]) -> bool:
    """True iff c1 dominates c2 and the vectors differ in some objective."""
    _check_same_length(c1, c2)
    return dominates(c1, c2) and any(a != b for a, b in zip(c1, c2))


def approx_dominates(c1: Sequence[float], c2: Sequence[float], alpha: float) -> bool:
    """True iff ``c1[o] <= c2[o] * alpha`` for every objective o.

    ``alpha`` must be >= 1; with ``alpha == 1`` this is exactly ``dominates``.
    """
    _check_same_length(c1, c2)
    alpha = validate_alpha(alpha)
    return all(a <= b * alpha for a, b in zip(c1, c2))


def weighted_cost(cost: Sequence[float], weights: Sequence[float]) -> float:
    """Scalarize a cost vector: sum of entry * weight over objectives."""
    _check_same_length(cost, weights)
    return float(sum(c * w for c, w in zip(cost, weights)))


def respects_bounds(cost: Sequence[float], bounds: Sequence[float], relax: float = 1.0) -> bool:
    """True iff ``cost[o] <= bounds[o] * relax`` for every objective.

    UNBOUNDED entries are satisfied by any cost regardless of ``relax``.
    """
    _check_same_length(cost, bounds)
    relax = validate_alpha(relax)
    return all(c <= b * relax for c, b in zip(cost, bounds))


def relative_cost(
    plan_cost: Sequence[float],
    weights: Sequence[float],
    bounds: Sequence[float] | None,
    opt_cost: Sequence[float],
    feasible_exists: bool = True,
) -> float:
    """Ratio of a plan's weighted cost to the optimal plan's weighted cost.

    For bounded instances where the plan violates the bounds while feasible
    plans exist, the ratio is infinite.  If both weighted costs are zero the
    plan is optimal and the ratio is 1.  A zero-cost optimum against a
    positive-cost plan yields infinity and a `DegenerateInstanceWarning`,
    so degenerate instances stay visible instead of being silently ordered.
    """
    if bounds is not None and feasible_exists and not respects_bounds(plan_cost, bounds):
        return math.inf
    num = weighted_cost(plan_cost, weights)
    den = weighted_cost(opt_cost, weights)
    if den == 0.0:
        if num == 0.0:
            return 1.0
        warnings.warn(
            "relative cost against a zero-cost optimum is undefined; reporting inf",
            DegenerateInstanceWarning,
            stacklevel=2,
        )
        return math.inf
    return num / den
