"""Problem documents and plot-ready exports: JSON in, CSV out.

A query-spec document is a JSON object describing one problem instance
plus how to run it:

    {
      "tables": [{"name": "A", "cardinality": 1000, "index": true}, ...],
      "predicates": [{"left": "A", "right": "B", "selectivity": 0.01}, ...],
      "objectives": ["total_time", "energy", "tuple_loss"],
      "weights": {"total_time": 1.0, "energy": 0.5},
      "bounds": {"tuple_loss": 0.0},
      "alpha": 1.5,
      "algorithm": "ira",
      "cost_config": "coeffs.txt",      // optional
      "deadline_ms": 60000,             // optional
      "seed": 7                         // optional
    }

Weights default to 0 for unnamed objectives (at least one must be
positive); absent bounds mean unbounded.  Parse failures carry the field
path of the offending entry.  Exports are plain CSV: the frontier table
has one row per Pareto member (costs in full precision plus the plan
string), the metrics table has one row per benchmark run in a stable
column order, with wall-clock timing optionally suppressed so reruns are
byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

from .bench import RunMetrics
from .catalog import Catalog, Predicate, Query, Table
from .costs import UNBOUNDED, Objective
from .errors import QuerySpecError
from .optimizer import OptimizerReport, ProblemInstance

__all__ = [
    "METRICS_COLUMNS",
    "QuerySpecDocument",
    "parse_spec_document",
    "parse_query_spec",
    "render_query_spec",
    "export_frontier",
    "export_metrics",
]

METRICS_COLUMNS = (
    "seed",
    "algorithm",
    "alpha",
    "n",
    "l",
    "wall_ms",
    "plans_total",
    "plans_max_set",
    "iterations",
    "weighted_cost",
    "rho",
    "timeout",
)

_ALGORITHMS = ("exa", "rta", "ira")
_KNOWN_KEYS = {
    "tables",
    "predicates",
    "objectives",
    "weights",
    "bounds",
    "alpha",
    "algorithm",
    "cost_config",
    "deadline_ms",
    "seed",
}


@dataclass(frozen=True)
class QuerySpecDocument:
    """A parsed spec: the problem instance plus its run configuration."""

    instance: ProblemInstance
    algorithm: str = "exa"
    cost_config: str | None = None
    deadline: float | None = None
    seed: int | None = None


def _fail(path: str, message: str) -> QuerySpecError:
    return QuerySpecError(f"{path}: {message}")


def _require(data: dict, key: str, kind, path: str):
    if key not in data:
        raise _fail(f"{path}{key}", "missing required field")
    value = data[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(f"{path}{key}", f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise _fail(f"{path}{key}", f"expected {kind.__name__}, got {value!r}")
    return value


def _objective(name, path: str) -> Objective:
    try:
        return Objective(name)
    except ValueError:
        known = ", ".join(o.value for o in Objective)
        raise _fail(path, f"unknown objective kind {name!r}; known kinds: {known}") from None


def parse_spec_document(text: str) -> QuerySpecDocument:
    """Parse a JSON query spec; errors carry the offending field path."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QuerySpecError(f"not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise QuerySpecError("top level: expected a JSON object")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise QuerySpecError(f"top level: unknown fields {sorted(unknown)}")

    raw_tables = _require(data, "tables", list, "")
    if not raw_tables:
        raise _fail("tables", "need at least one table")
    tables = []
    for i, entry in enumerate(raw_tables):
        path = f"tables[{i}]"
        if not isinstance(entry, dict):
            raise _fail(path, "expected an object")
        unknown = set(entry) - {"name", "cardinality", "index"}
        if unknown:
            raise _fail(path, f"unknown fields {sorted(unknown)}")
        name = _require(entry, "name", str, path + ".")
        card = _require(entry, "cardinality", float, path + ".")
        index = entry.get("index", False)
        if not isinstance(index, bool):
            raise _fail(f"{path}.index", f"expected true/false, got {index!r}")
        try:
            tables.append(Table(name, card, index))
        except ValueError as exc:
            raise _fail(path, str(exc)) from None
    try:
        catalog = Catalog(tables)
    except ValueError as exc:
        raise _fail("tables", str(exc)) from None

    predicates = []
    for i, entry in enumerate(data.get("predicates", [])):
        path = f"predicates[{i}]"
        if not isinstance(entry, dict):
            raise _fail(path, "expected an object")
        unknown = set(entry) - {"left", "right", "selectivity"}
        if unknown:
            raise _fail(path, f"unknown fields {sorted(unknown)}")
        left = _require(entry, "left", str, path + ".")
        right = _require(entry, "right", str, path + ".")
        sel = _require(entry, "selectivity", float, path + ".")
        try:
            predicates.append(Predicate(left, right, sel))
        except ValueError as exc:
            raise _fail(path, str(exc)) from None

    raw_objectives = _require(data, "objectives", list, "")
    if not raw_objectives:
        raise _fail("objectives", "need at least one objective kind")
    objectives = tuple(
        _objective(name, f"objectives[{i}]") for i, name in enumerate(raw_objectives)
    )
    if len(set(objectives)) != len(objectives):
        raise _fail("objectives", "objective kinds must be distinct")

    raw_weights = data.get("weights", {})
    if not isinstance(raw_weights, dict):
        raise _fail("weights", "expected a map of objective kind to weight")
    weights = []
    for i, obj in enumerate(objectives):
        value = raw_weights.get(obj.value, 0.0)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(f"weights.{obj.value}", f"expected a number, got {value!r}")
        if value < 0:
            raise _fail(f"weights.{obj.value}", f"weights must be non-negative, got {value}")
        weights.append(float(value))
    for key in raw_weights:
        if _objective(key, f"weights.{key}") not in objectives:
            raise _fail(f"weights.{key}", "weight names an objective not in the list")
    if not any(w > 0 for w in weights):
        raise _fail("weights", "at least one positive weight is required")

    raw_bounds = data.get("bounds", {})
    if not isinstance(raw_bounds, dict):
        raise _fail("bounds", "expected a map of objective kind to bound")
    bounds = []
    for obj in objectives:
        value = raw_bounds.get(obj.value, UNBOUNDED)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _fail(f"bounds.{obj.value}", f"expected a number, got {value!r}")
        if value < 0:
            raise _fail(f"bounds.{obj.value}", f"bounds must be non-negative, got {value}")
        bounds.append(float(value))
    for key in raw_bounds:
        if _objective(key, f"bounds.{key}") not in objectives:
            raise _fail(f"bounds.{key}", "bound names an objective not in the list")

    alpha = data.get("alpha", 1.0)
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise _fail("alpha", f"expected a number, got {alpha!r}")
    if alpha < 1.0:
        raise _fail("alpha", f"alpha must be >= 1, got {alpha}")

    algorithm = data.get("algorithm", "exa")
    if algorithm not in _ALGORITHMS:
        raise _fail("algorithm", f"expected one of {_ALGORITHMS}, got {algorithm!r}")

    cost_config = data.get("cost_config")
    if cost_config is not None and not isinstance(cost_config, str):
        raise _fail("cost_config", f"expected a path string, got {cost_config!r}")

    deadline = None
    if "deadline_ms" in data:
        ms = _require(data, "deadline_ms", float, "")
        if ms <= 0:
            raise _fail("deadline_ms", f"must be positive, got {ms}")
        deadline = ms / 1000.0

    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise _fail("seed", f"expected an integer, got {seed!r}")

    try:
        instance = ProblemInstance(
            catalog=catalog,
            query=Query(tuple(t.name for t in tables), tuple(predicates)),
            objectives=objectives,
            weights=tuple(weights),
            bounds=tuple(bounds),
            alpha_user=float(alpha),
        )
    except ValueError as exc:
        raise QuerySpecError(str(exc)) from None
    return QuerySpecDocument(
        instance=instance,
        algorithm=algorithm,
        cost_config=cost_config,
        deadline=deadline,
        seed=seed,
    )


def parse_query_spec(text: str) -> ProblemInstance:
    """Parse a JSON query spec down to its validated problem instance."""
    return parse_spec_document(text).instance


def render_query_spec(doc: QuerySpecDocument) -> str:
    """Serialize a document back to JSON; reparsing yields an equal document."""
    instance = doc.instance
    data: dict = {
        "tables": [
            {
                "name": t.name,
                "cardinality": t.cardinality,
                "index": t.has_index,
            }
            for t in (instance.catalog[name] for name in instance.query.tables)
        ],
        "predicates": [
            {"left": p.left, "right": p.right, "selectivity": p.selectivity}
            for p in instance.query.predicates
        ],
        "objectives": [o.value for o in instance.objectives],
        "weights": {
            o.value: w for o, w in zip(instance.objectives, instance.weights)
        },
        "algorithm": doc.algorithm,
        "alpha": instance.alpha_user,
    }
    bounds = {
        o.value: b
        for o, b in zip(instance.objectives, instance.bounds)
        if b != UNBOUNDED
    }
    if bounds:
        data["bounds"] = bounds
    if doc.cost_config is not None:
        data["cost_config"] = doc.cost_config
    if doc.deadline is not None:
        data["deadline_ms"] = doc.deadline * 1000.0
    if doc.seed is not None:
        data["seed"] = doc.seed
    return json.dumps(data, indent=2)


def _write_rows(path_or_file, rows) -> None:
    if hasattr(path_or_file, "write"):
        writer = csv.writer(path_or_file, lineterminator="\n")
        writer.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows(rows)


def export_frontier(report: OptimizerReport, path_or_file) -> None:
    """Write the report's frontier as CSV: one objective column per kind,
    full-precision decimal entries, plus the plan string; rows sorted
    lexicographically by cost so equal frontiers give equal files.
    """
    header = [o.value for o in report.objectives] + ["plan"]
    rows = [header]
    for cost, plan in sorted(report.frontier):
        rows.append([repr(float(x)) for x in cost] + [plan])
    _write_rows(path_or_file, rows)


def _metric_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def export_metrics(
    rows: Sequence[RunMetrics], path_or_file, *, timing: bool = True
) -> None:
    """Write benchmark rows as CSV in the stable column order.

    With ``timing=False`` the wall_ms column is left empty: wall-clock is
    the one environmental value in a row, and suppressing it makes reruns
    of the same seeds byte-identical.
    """
    out = [list(METRICS_COLUMNS)]
    for m in rows:
        out.append(
            [
                str(m.seed),
                m.algorithm,
                repr(float(m.alpha)),
                str(m.n),
                str(m.l),
                _metric_value(m.wall_ms if timing else None),
                str(m.plans_total),
                str(m.plans_max_set),
                str(m.iterations),
                _metric_value(m.weighted_cost),
                _metric_value(m.rho),
                _metric_value(m.timeout),
            ]
        )
    _write_rows(path_or_file, out)
