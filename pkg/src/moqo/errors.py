"""Exception types shared across the package."""
from __future__ import annotations

__all__ = [
    "MoqoError",
    "MismatchedObjectivesError",
    "GridUndefinedError",
    "OperatorInapplicableError",
    "ScheduleUndefinedError",
    "IterationLimitError",
    "EnumerationLimitError",
    "QuerySpecError",
]


class MoqoError(Exception):
    """Base class for every error raised by this package."""


class MismatchedObjectivesError(MoqoError, ValueError):
    """Cost vectors defined over different objective lists were combined."""


class GridUndefinedError(MoqoError, ValueError):
    """The log-scale cost grid is undefined, e.g. for alpha == 1."""


class OperatorInapplicableError(MoqoError, ValueError):
    """A join operator cannot be applied to the given operands.

    This is a signal, not a failure: enumeration skips the combination.
    """


class ScheduleUndefinedError(MoqoError, ValueError):
    """The iterative precision schedule is undefined (single objective)."""


class IterationLimitError(MoqoError, RuntimeError):
    """Iterative refinement hit its iteration cap without converging."""


class EnumerationLimitError(MoqoError, ValueError):
    """Exhaustive enumeration was refused because the plan space is too big."""


class QuerySpecError(MoqoError, ValueError):
    """An instance spec document failed validation; message names the field."""
