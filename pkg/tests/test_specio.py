"""Query-spec parsing, rendering, and the two CSV exports."""
from __future__ import annotations

import io
import json
import math

import pytest

from moqo.costs import UNBOUNDED, Objective, dominates
from moqo.bench import RunMetrics
from moqo.errors import QuerySpecError
from moqo.optimizer import exa_optimize
from moqo.specio import (
    METRICS_COLUMNS,
    export_frontier,
    export_metrics,
    parse_query_spec,
    parse_spec_document,
    render_query_spec,
)


def minimal_spec(**overrides) -> dict:
    spec = {
        "tables": [
            {"name": "A", "cardinality": 120},
            {"name": "B", "cardinality": 45, "index": True},
        ],
        "predicates": [{"left": "A", "right": "B", "selectivity": 0.02}],
        "objectives": ["total_time", "energy"],
        "weights": {"total_time": 1.0},
    }
    spec.update(overrides)
    return spec


def test_minimal_spec_defaults():
    doc = parse_spec_document(json.dumps(minimal_spec()))
    instance = doc.instance
    assert doc.algorithm == "exa"
    assert doc.cost_config is None
    assert doc.deadline is None
    assert doc.seed is None
    assert instance.alpha_user == 1.0
    assert instance.objectives == (Objective.TOTAL_TIME, Objective.ENERGY)
    # the unnamed objective gets weight zero, absent bounds stay unbounded
    assert instance.weights == (1.0, 0.0)
    assert instance.bounds == (UNBOUNDED, UNBOUNDED)
    assert [t.name for t in instance.catalog.tables] == ["A", "B"]
    assert instance.catalog.tables[1].has_index
    assert instance.query.predicates[0].selectivity == 0.02


def test_full_spec_round_trips_through_render():
    spec = minimal_spec(
        algorithm="ira",
        alpha=1.5,
        bounds={"energy": 250.0},
        deadline_ms=1500,
        seed=11,
        cost_config="model.cfg",
    )
    text = render_query_spec(parse_spec_document(json.dumps(spec)))
    doc = parse_spec_document(text)
    assert doc.algorithm == "ira"
    assert doc.deadline == 1.5
    assert doc.seed == 11
    assert doc.cost_config == "model.cfg"
    assert doc.instance.alpha_user == 1.5
    assert doc.instance.bounds == (UNBOUNDED, 250.0)
    # rendering is a fixed point once parsed
    assert render_query_spec(parse_spec_document(text)) == text


def test_parse_query_spec_returns_the_instance():
    instance = parse_query_spec(json.dumps(minimal_spec()))
    assert len(instance.query) == 2


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda s: s.pop("tables"), "missing required field"),
        (lambda s: s.update(tables=[]), "need at least one table"),
        (lambda s: s.update(objectives=[]), "need at least one objective"),
        (lambda s: s.update(objectives=["total_time", "total_time"]), "distinct"),
        (lambda s: s.update(objectives=["total_time", "elapsed"]), "unknown objective kind"),
        (lambda s: s.update(weights={}), "at least one positive weight"),
        (lambda s: s.update(weights={"cores": 1.0}), "not in the list"),
        (lambda s: s.update(weights={"total_time": -2.0}), "non-negative"),
        (lambda s: s.update(bounds={"cores": 1.0}), "not in the list"),
        (lambda s: s.update(bounds={"energy": -1.0}), "non-negative"),
        (lambda s: s.update(alpha=0.9), "alpha must be >= 1, got 0.9"),
        (lambda s: s.update(alpha="big"), "expected a number"),
        (lambda s: s.update(algorithm="grease"), "expected one of"),
        (lambda s: s.update(deadline_ms=0), "must be positive"),
        (lambda s: s.update(seed=2.5), "expected an integer"),
        (lambda s: s.update(flavor="mild"), "unknown fields"),
        (lambda s: s["tables"][0].update(has_index=True), r"tables\[0\]: unknown fields"),
        (lambda s: s["predicates"][0].update(sel=0.5), r"predicates\[0\]: unknown fields"),
    ],
)
def test_spec_field_errors(mutate, fragment):
    spec = minimal_spec()
    mutate(spec)
    with pytest.raises(QuerySpecError, match=fragment):
        parse_spec_document(json.dumps(spec))


def test_spec_path_prefixes_locate_the_bad_field():
    spec = minimal_spec()
    spec["predicates"][0]["selectivity"] = 3.0
    with pytest.raises(QuerySpecError, match=r"predicates\[0\]"):
        parse_spec_document(json.dumps(spec))
    spec = minimal_spec()
    spec["tables"][1]["cardinality"] = "many"
    with pytest.raises(QuerySpecError, match=r"tables\[1\]"):
        parse_spec_document(json.dumps(spec))


def test_spec_rejects_non_json_and_non_objects():
    with pytest.raises(QuerySpecError, match="not valid JSON"):
        parse_spec_document("{nope")
    with pytest.raises(QuerySpecError, match="expected a JSON object"):
        parse_spec_document("[1, 2]")


def test_spec_rejects_boolean_numbers():
    spec = minimal_spec()
    spec["tables"][0]["cardinality"] = True
    with pytest.raises(QuerySpecError):
        parse_spec_document(json.dumps(spec))


def test_frontier_export_is_sorted_and_mutually_non_dominated():
    doc = parse_spec_document(json.dumps(minimal_spec()))
    report = exa_optimize(doc.instance)
    buffer = io.StringIO()
    export_frontier(report, buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "total_time,energy,plan"
    assert len(lines) == 1 + len(report.frontier)
    rows = []
    for line in lines[1:]:
        time_s, energy_s, _ = line.split(",", 2)
        rows.append((float(time_s), float(energy_s)))
    assert rows == sorted(rows)
    for i, a in enumerate(rows):
        for j, b in enumerate(rows):
            assert i == j or not dominates(a, b)


def test_frontier_export_values_round_trip_exactly():
    doc = parse_spec_document(json.dumps(minimal_spec()))
    report = exa_optimize(doc.instance)
    buffer = io.StringIO()
    export_frontier(report, buffer)
    exported = set()
    for line in buffer.getvalue().splitlines()[1:]:
        time_s, energy_s, _ = line.split(",", 2)
        exported.add((float(time_s), float(energy_s)))
    assert exported == {cost for cost, _ in report.frontier}


def sample_metrics(wall: float) -> list[RunMetrics]:
    return [
        RunMetrics(
            seed=3, algorithm="exa", alpha=1.0, n=3, l=2,
            wall_ms=wall, plans_total=115, plans_max_set=40, iterations=1,
            weighted_cost=158.5, rho=1.0, timeout=False,
        ),
        RunMetrics(
            seed=3, algorithm="ira", alpha=1.5, n=3, l=2,
            wall_ms=wall * 0.25, plans_total=20, plans_max_set=4, iterations=2,
            weighted_cost=None, rho=math.inf, timeout=True,
            error="ValueError: boom",
        ),
    ]


def test_metrics_export_columns_and_values():
    buffer = io.StringIO()
    export_metrics(sample_metrics(12.5), buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == ",".join(METRICS_COLUMNS)
    first = lines[1].split(",")
    assert first[METRICS_COLUMNS.index("seed")] == "3"
    assert first[METRICS_COLUMNS.index("alpha")] == "1.0"
    assert first[METRICS_COLUMNS.index("wall_ms")] == "12.5"
    assert first[METRICS_COLUMNS.index("timeout")] == "false"
    second = lines[2].split(",")
    # None fields export empty, infinities export as "inf", booleans lowercase
    assert second[METRICS_COLUMNS.index("weighted_cost")] == ""
    assert second[METRICS_COLUMNS.index("rho")] == "inf"
    assert second[METRICS_COLUMNS.index("timeout")] == "true"
    # the internal error note never leaks into the CSV
    assert "boom" not in buffer.getvalue()


def test_metrics_export_without_timing_is_reproducible():
    first = io.StringIO()
    second = io.StringIO()
    export_metrics(sample_metrics(12.5), first, timing=False)
    export_metrics(sample_metrics(99.9), second, timing=False)
    assert first.getvalue() == second.getvalue()
    row = first.getvalue().splitlines()[1].split(",")
    assert row[METRICS_COLUMNS.index("wall_ms")] == ""


def test_metrics_export_to_path(tmp_path):
    target = tmp_path / "metrics.csv"
    export_metrics(sample_metrics(1.0), target)
    content = target.read_text()
    assert content.startswith(",".join(METRICS_COLUMNS) + "\n")
    assert content.count("\n") == 3
