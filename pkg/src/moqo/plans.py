"""Scan/join operators, plan records, and the synthetic multi-objective cost model.

The cost model is self-contained and deliberately simple.  Per-operator
"work" is a function of the input and output cardinalities only:

* hash join:          work = |L| + |R| + |out|
* sort-merge join:    work = |L|*log2(1+|L|) + |R|*log2(1+|R|) + |L| + |R| + |out|
* nested loop:        work = |L|*|R| + |out|
* index nested loop:  work = |L|*log2(1+|R|) + |out|

and the objective entries of a join with degree of parallelism ``d`` combine
the operand entries as

* total_time       = max(time_L, time_R) + work / d          (pipelined inputs)
* startup_time     = hash: max(startup_L, time_R);  sort-merge: max(time_L, time_R);
                     nested loops: max(startup_L, startup_R)
* cpu_load         = cpu_L + cpu_R + work
* io_load          = io_L + io_R + spill      (spill: sort-merge |L|+|R|, hash |R|, else 0)
* cores            = max(cores_L + cores_R, d)
* disc_footprint   = disc_L + disc_R + spill
* buffer_footprint = max(buf_L, buf_R) + opbuf (hash |R|, sort-merge |L|+|R|, else 1)
* energy           = energy_L + energy_R + work * (1 + 0.2*(d-1))
* tuple_loss       = 1 - (1-loss_L)*(1-loss_R)

A full scan of a table with ``t`` rows reads ``t`` tuples; a sampling scan
with rate ``r`` reads ``r*t`` tuples and loses a ``1-r`` fraction of result
tuples.  Scans cost ``t_eff`` in time/cpu/io/energy, one core, one buffer
unit, no startup and no disc footprint.

Join costing uses full-data cardinalities: ``|L|``, ``|R|`` and ``|out|``
above are properties of the joined table sets (base cardinalities times the
covered join selectivities), identical for every plan producing the same
result.  Sampling therefore pays off through the scan's own cost entries and
the tuple-loss column, never by shrinking downstream size estimates.  Plan
records additionally carry ``out_card``, the result-size estimate under the
plan's actual sampling rates, as a descriptive field.

With cardinalities fixed per table set, every combinator above is a sum,
maximum, or constant shift of the operand entries, so the combined cost is
monotone in the operand costs (replacing a sub-plan by a cheaper-everywhere
one never makes the whole plan worse) and scaling both operand vectors by a
factor ``alpha >= 1`` never inflates the combined vector by more than
``alpha``.  Those two closure properties are what make bottom-up pruning
with (approximate) dominance safe, and both are asserted at scale by the
test-suite.

All numeric coefficients live in a flat key/value table (`CostModelConfig`)
so experiments can rescale individual terms without touching code.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .costs import Objective, validate_objectives
from .errors import OperatorInapplicableError

__all__ = [
    "SAMPLE_RATES",
    "DOP_LEVELS",
    "ScanKind",
    "JoinKind",
    "ScanOp",
    "JoinOp",
    "OperatorSpace",
    "default_operator_space",
    "uniform_operator_space",
    "PlanRecord",
    "PlanRegistry",
    "CostModelConfig",
    "CostModel",
    "scan_plan",
    "combine_plans",
    "serialize_plan",
    "parse_plan",
    "plan_structure",
]

SAMPLE_RATES = (0.01, 0.02, 0.03, 0.04, 0.05)
DOP_LEVELS = (1, 2, 4)


class ScanKind(Enum):
    FULL = "full"
    SAMPLE = "sample"


class JoinKind(Enum):
    HASH = "hash"
    SORT_MERGE = "sort_merge"
    NESTED_LOOP = "nested_loop"
    INDEX_NESTED_LOOP = "index_nested_loop"


_SCAN_TOKENS = {ScanKind.FULL: "FullScan", ScanKind.SAMPLE: "SampleScan"}
_JOIN_TOKENS = {
    JoinKind.HASH: "HashJ",
    JoinKind.SORT_MERGE: "SMJ",
    JoinKind.NESTED_LOOP: "NLJ",
    JoinKind.INDEX_NESTED_LOOP: "IdxNL",
}


@dataclass(frozen=True, slots=True)
class ScanOp:
    """A table access path: full scan, or sampling scan with a rate."""

    kind: ScanKind
    rate: float | None = None

    def __post_init__(self) -> None:
        if self.kind is ScanKind.FULL:
            if self.rate is not None:
                raise ValueError("full scan takes no sampling rate")
        else:
            if self.rate is None or not (0.0 < self.rate < 1.0):
                raise ValueError(f"sampling rate must lie in (0, 1), got {self.rate}")

    @property
    def token(self) -> str:
        return _SCAN_TOKENS[self.kind]


@dataclass(frozen=True, slots=True)
class JoinOp:
    """A join operator together with its degree of parallelism."""

    kind: JoinKind
    dop: int = 1

    def __post_init__(self) -> None:
        if int(self.dop) != self.dop or self.dop < 1:
            raise ValueError(f"degree of parallelism must be an integer >= 1, got {self.dop}")
        object.__setattr__(self, "dop", int(self.dop))

    @property
    def token(self) -> str:
        return _JOIN_TOKENS[self.kind]


@dataclass(frozen=True, slots=True)
class OperatorSpace:
    """The scan and join operator configurations available to a search."""

    scans: tuple[ScanOp, ...]
    joins: tuple[JoinOp, ...]

    def __post_init__(self) -> None:
        if not self.scans or not self.joins:
            raise ValueError("operator space needs at least one scan and one join operator")
        if len(set(self.scans)) != len(self.scans) or len(set(self.joins)) != len(self.joins):
            raise ValueError("duplicate operator configurations")


def default_operator_space() -> OperatorSpace:
    """Full scans plus 1..5% sampling scans; all join kinds at dop 1, 2, 4."""
    scans = (ScanOp(ScanKind.FULL),) + tuple(ScanOp(ScanKind.SAMPLE, r) for r in SAMPLE_RATES)
    joins = tuple(JoinOp(kind, d) for kind in JoinKind for d in DOP_LEVELS)
    return OperatorSpace(scans, joins)


def uniform_operator_space(j: int) -> OperatorSpace:
    """j scan and j join configurations, all applicable everywhere.

    Index nested loop is excluded since its applicability depends on the
    operand shape; this space makes plan counting formulas exact.
    """
    if not (1 <= j <= 3):
        raise ValueError(f"uniform operator space supports 1 <= j <= 3, got {j}")
    scans = (ScanOp(ScanKind.FULL), ScanOp(ScanKind.SAMPLE, 0.01), ScanOp(ScanKind.SAMPLE, 0.03))
    joins = (JoinOp(JoinKind.HASH, 1), JoinOp(JoinKind.SORT_MERGE, 1), JoinOp(JoinKind.NESTED_LOOP, 2))
    return OperatorSpace(scans[:j], joins[:j])


@dataclass(frozen=True, slots=True)
class PlanRecord:
    """One plan node.  Sub-plans are referenced by id, so records stay flat.

    ``cost`` holds one entry per cost-model column (the active objectives,
    plus a trailing auxiliary total_time column when startup_time is active
    without total_time, since the startup combinator reads operand times).
    ``full_card`` is the full-data result cardinality used for costing (a
    property of the covered table set); ``out_card`` is the result-size
    estimate under the plan's sampling rates.
    """

    plan_id: int
    op: ScanOp | JoinOp
    left: int | None
    right: int | None
    tables: int
    table: str | None
    base_index: bool
    out_card: float
    full_card: float
    cost: tuple[float, ...]

    @property
    def is_scan(self) -> bool:
        return isinstance(self.op, ScanOp)


class PlanRegistry:
    """Append-only store of plan records; the index is the plan id."""

    def __init__(self) -> None:
        self._records: list[PlanRecord] = []

    def add(
        self,
        op: ScanOp | JoinOp,
        left: int | None,
        right: int | None,
        tables: int,
        out_card: float,
        full_card: float,
        cost: tuple[float, ...],
        table: str | None = None,
        base_index: bool = False,
    ) -> PlanRecord:
        rec = PlanRecord(
            plan_id=len(self._records),
            op=op,
            left=left,
            right=right,
            tables=tables,
            table=table,
            base_index=base_index,
            out_card=float(out_card),
            full_card=float(full_card),
            cost=tuple(cost),
        )
        self._records.append(rec)
        return rec

    def __getitem__(self, plan_id: int) -> PlanRecord:
        return self._records[plan_id]

    def __len__(self) -> int:
        return len(self._records)


# --- coefficient table -------------------------------------------------------

# Published per-objective lower bounds on nonzero cost entries (floor.*) are
# derived for the documented instance envelope: tables of >= 1 row, sampling
# rates >= 0.01, selectivities >= 1e-4, and at most 8 tables per query.  The
# smallest nonzero time-like entry is a 1% sample of a one-row table (0.01);
# the smallest nonzero tuple loss is 1 - 0.05; disc footprints inherit the
# smallest reachable intermediate cardinality, (0.01)^7 * (1e-4)^6 = 1e-38.
_DEFAULTS: dict[str, float] = {
    "scan.work_coeff": 1.0,
    "hash.work.left_coeff": 1.0,
    "hash.work.right_coeff": 1.0,
    "hash.work.out_coeff": 1.0,
    "sort_merge.work.sort_left_coeff": 1.0,
    "sort_merge.work.sort_right_coeff": 1.0,
    "sort_merge.work.left_coeff": 1.0,
    "sort_merge.work.right_coeff": 1.0,
    "sort_merge.work.out_coeff": 1.0,
    "nested_loop.work.pair_coeff": 1.0,
    "nested_loop.work.out_coeff": 1.0,
    "index_nested_loop.work.probe_coeff": 1.0,
    "index_nested_loop.work.out_coeff": 1.0,
    "hash.spill.right_coeff": 1.0,
    "sort_merge.spill.left_coeff": 1.0,
    "sort_merge.spill.right_coeff": 1.0,
    "hash.opbuf.right_coeff": 1.0,
    "sort_merge.opbuf.left_coeff": 1.0,
    "sort_merge.opbuf.right_coeff": 1.0,
    "nested_loop.opbuf.const": 1.0,
    "index_nested_loop.opbuf.const": 1.0,
    "energy.dop_overhead": 0.2,
    "floor.total_time": 0.01,
    "floor.startup_time": 0.01,
    "floor.cpu_load": 0.01,
    "floor.io_load": 0.01,
    "floor.cores": 1.0,
    "floor.disc_footprint": 1e-38,
    "floor.buffer_footprint": 1.0,
    "floor.energy": 0.01,
    "floor.tuple_loss": 0.95,
}


class CostModelConfig:
    """Flat key/value coefficient table, e.g. ``hash.work.out_coeff=1.0``.

    Unknown keys and negative values are rejected; absent keys fall back to
    the defaults documented in this module.
    """

    def __init__(self, overrides: dict[str, float] | None = None):
        self._values = dict(_DEFAULTS)
        for key, value in (overrides or {}).items():
            if key not in _DEFAULTS:
                raise ValueError(f"unknown cost-model coefficient {key!r}")
            value = float(value)
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"coefficient {key!r} must be a finite non-negative real")
            self._values[key] = value

    @classmethod
    def from_text(cls, text: str) -> "CostModelConfig":
        """Parse ``key=value`` lines; blank lines and ``#`` comments ignored."""
        overrides: dict[str, float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            try:
                overrides[key.strip()] = float(value)
            except ValueError:
                raise ValueError(f"line {lineno}: value of {key.strip()!r} is not a number") from None
        return cls(overrides)

    def __getitem__(self, key: str) -> float:
        return self._values[key]

    def floor(self, objective: Objective) -> float:
        return self._values[f"floor.{objective.value}"]

    def as_dict(self) -> dict[str, float]:
        return dict(self._values)


# --- the model ----------------------------------------------------------------

_T = Objective.TOTAL_TIME
_S = Objective.STARTUP_TIME
_CPU = Objective.CPU_LOAD
_IO = Objective.IO_LOAD
_CORES = Objective.CORES
_DISC = Objective.DISC_FOOTPRINT
_BUF = Objective.BUFFER_FOOTPRINT
_EN = Objective.ENERGY
_LOSS = Objective.TUPLE_LOSS


class CostModel:
    """Evaluates scan and join costs over a chosen list of objectives.

    ``columns`` is the physical cost layout: the active objectives in order,
    plus an auxiliary total_time column appended when startup_time is active
    without total_time.  Plan records and plan sets store full columns; the
    first ``len(objectives)`` entries are the reported cost vector.
    """

    def __init__(
        self,
        objectives: Sequence[Objective | str],
        config: CostModelConfig | None = None,
    ):
        self.objectives = validate_objectives(objectives)
        self.config = config or CostModelConfig()
        columns = list(self.objectives)
        if _S in columns and _T not in columns:
            columns.append(_T)
        self.columns: tuple[Objective, ...] = tuple(columns)
        self._col = {obj: i for i, obj in enumerate(self.columns)}
        self.n_objectives = len(self.objectives)
        self.n_columns = len(self.columns)
        cfg = self.config
        self._scan_coeff = cfg["scan.work_coeff"]
        self._energy_overhead = cfg["energy.dop_overhead"]

    def active(self, cost: Sequence[float]) -> tuple[float, ...]:
        """Project a column vector onto the active objectives."""
        return tuple(float(c) for c in cost[: self.n_objectives])

    def pad_weights(self, weights: Sequence[float]) -> np.ndarray:
        """Extend an active-objective weight vector with zeros for aux columns."""
        w = np.zeros(self.n_columns, dtype=np.float64)
        w[: self.n_objectives] = np.asarray(weights, dtype=np.float64)
        return w

    # -- scans -------------------------------------------------------------

    def scan_cost(self, table_card: float, op: ScanOp) -> tuple[float, np.ndarray]:
        """Output cardinality and column cost vector of a scan."""
        if table_card < 1:
            raise ValueError("table cardinality must be >= 1")
        if op.kind is ScanKind.FULL:
            out = float(table_card)
            loss = 0.0
        else:
            out = op.rate * float(table_card)
            loss = 1.0 - op.rate
        t_eff = out * self._scan_coeff
        cost = np.zeros(self.n_columns, dtype=np.float64)
        for obj, k in self._col.items():
            if obj in (_T, _CPU, _IO, _EN):
                cost[k] = t_eff
            elif obj in (_CORES, _BUF):
                cost[k] = 1.0
            elif obj is _LOSS:
                cost[k] = loss
            # startup_time and disc_footprint stay 0
        return out, cost

    # -- joins -------------------------------------------------------------

    def combine_block(
        self,
        op: JoinOp,
        costs_l: np.ndarray,
        cards_l: np.ndarray,
        costs_r: np.ndarray,
        cards_r: np.ndarray,
        selectivity: float = 1.0,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Combine every left plan with every right plan under one join op.

        ``costs_l`` is (n1, C), ``cards_l`` is (n1,), likewise for the right
        side.  Returns ``(out_cards, costs)`` with shapes (n1*n2,) and
        (n1*n2, C), rows ordered left-index-major: row = i_left * n2 + i_right.
        """
        cfg = self.config
        costs_l = np.asarray(costs_l, dtype=np.float64)
        costs_r = np.asarray(costs_r, dtype=np.float64)
        cards_l = np.asarray(cards_l, dtype=np.float64)
        cards_r = np.asarray(cards_r, dtype=np.float64)
        n1, n2 = cards_l.shape[0], cards_r.shape[0]
        cl = cards_l[:, None]
        cr = cards_r[None, :]
        out = (cl * cr) * selectivity

        kind = op.kind
        if kind is JoinKind.HASH:
            work = (
                cfg["hash.work.left_coeff"] * cl
                + cfg["hash.work.right_coeff"] * cr
                + cfg["hash.work.out_coeff"] * out
            )
            spill = cfg["hash.spill.right_coeff"] * np.broadcast_to(cr, (n1, n2))
            opbuf = cfg["hash.opbuf.right_coeff"] * np.broadcast_to(cr, (n1, n2))
        elif kind is JoinKind.SORT_MERGE:
            sort_l = (cards_l * np.log2(1.0 + cards_l))[:, None]
            sort_r = (cards_r * np.log2(1.0 + cards_r))[None, :]
            work = (
                cfg["sort_merge.work.sort_left_coeff"] * sort_l
                + cfg["sort_merge.work.sort_right_coeff"] * sort_r
                + cfg["sort_merge.work.left_coeff"] * cl
                + cfg["sort_merge.work.right_coeff"] * cr
                + cfg["sort_merge.work.out_coeff"] * out
            )
            spill = cfg["sort_merge.spill.left_coeff"] * cl + cfg["sort_merge.spill.right_coeff"] * cr
            opbuf = cfg["sort_merge.opbuf.left_coeff"] * cl + cfg["sort_merge.opbuf.right_coeff"] * cr
        elif kind is JoinKind.NESTED_LOOP:
            work = cfg["nested_loop.work.pair_coeff"] * (cl * cr) + cfg["nested_loop.work.out_coeff"] * out
            spill = None
            opbuf = np.full((n1, n2), cfg["nested_loop.opbuf.const"])
        elif kind is JoinKind.INDEX_NESTED_LOOP:
            work = (
                cfg["index_nested_loop.work.probe_coeff"] * (cl * np.log2(1.0 + cards_r)[None, :])
                + cfg["index_nested_loop.work.out_coeff"] * out
            )
            spill = None
            opbuf = np.full((n1, n2), cfg["index_nested_loop.opbuf.const"])
        else:  # pragma: no cover
            raise ValueError(f"unknown join kind {kind}")

        res = np.empty((n1, n2, self.n_columns), dtype=np.float64)
        col = self._col
        dop = float(op.dop)
        for obj, k in col.items():
            a = costs_l[:, k][:, None]
            b = costs_r[:, k][None, :]
            if obj is _T:
                res[:, :, k] = np.maximum(a, b) + work / dop
            elif obj is _S:
                tl = costs_l[:, col[_T]][:, None]
                tr = costs_r[:, col[_T]][None, :]
                if kind is JoinKind.HASH:
                    res[:, :, k] = np.maximum(a, tr)
                elif kind is JoinKind.SORT_MERGE:
                    res[:, :, k] = np.maximum(tl, tr)
                else:
                    res[:, :, k] = np.maximum(a, b)
            elif obj is _CPU:
                res[:, :, k] = a + b + work
            elif obj is _IO:
                res[:, :, k] = a + b + spill if spill is not None else a + b
            elif obj is _CORES:
                res[:, :, k] = np.maximum(a + b, dop)
            elif obj is _DISC:
                res[:, :, k] = a + b + spill if spill is not None else a + b
            elif obj is _BUF:
                res[:, :, k] = np.maximum(a, b) + opbuf
            elif obj is _EN:
                res[:, :, k] = a + b + work * (1.0 + self._energy_overhead * (dop - 1.0))
            elif obj is _LOSS:
                res[:, :, k] = 1.0 - (1.0 - a) * (1.0 - b)
        return out.reshape(n1 * n2), res.reshape(n1 * n2, self.n_columns)

    def combine_cost(
        self,
        op: JoinOp,
        cost_l: Sequence[float],
        card_l: float,
        cost_r: Sequence[float],
        card_r: float,
        selectivity: float = 1.0,
    ) -> tuple[float, np.ndarray]:
        """Scalar variant of `combine_block` for a single operand pair."""
        out, cost = self.combine_block(
            op,
            np.asarray(cost_l, dtype=np.float64).reshape(1, -1),
            np.asarray([card_l], dtype=np.float64),
            np.asarray(cost_r, dtype=np.float64).reshape(1, -1),
            np.asarray([card_r], dtype=np.float64),
            selectivity,
        )
        return float(out[0]), cost[0]


def inl_applicable(right: PlanRecord) -> bool:
    """Index nested loop needs the inner side to be a scan of an indexed table."""
    return right.is_scan and right.base_index


def scan_plan(
    model: CostModel,
    registry: PlanRegistry,
    table_name: str,
    table_card: float,
    op: ScanOp,
    *,
    mask: int = 1,
    has_index: bool = False,
) -> PlanRecord:
    """Build and register an access-path plan for one base table."""
    out, cost = model.scan_cost(table_card, op)
    return registry.add(
        op, None, None, mask, out, float(table_card), tuple(cost), table=table_name, base_index=has_index
    )


def combine_plans(
    model: CostModel,
    registry: PlanRegistry,
    op: JoinOp,
    left: PlanRecord,
    right: PlanRecord,
    selectivity: float = 1.0,
) -> PlanRecord:
    """Join two sub-plans over disjoint table sets into a new registered plan."""
    if left.tables & right.tables:
        raise ValueError("operand plans cover overlapping table sets")
    if op.kind is JoinKind.INDEX_NESTED_LOOP and not inl_applicable(right):
        raise OperatorInapplicableError(
            "index nested loop requires the right operand to be a base-table "
            "access over an indexed table"
        )
    full, cost = model.combine_cost(op, left.cost, left.full_card, right.cost, right.full_card, selectivity)
    out = left.out_card * right.out_card * selectivity
    return registry.add(op, left.plan_id, right.plan_id, left.tables | right.tables, out, full, tuple(cost))


# --- plan strings --------------------------------------------------------------


def _format_rate(rate: float) -> str:
    return format(rate, "g")


def serialize_plan(registry: PlanRegistry, plan: PlanRecord) -> str:
    """Injective text form, e.g. ``HashJ[d=2](FullScan(A),SampleScan(C,0.02))``."""
    if plan.is_scan:
        if plan.op.kind is ScanKind.FULL:
            return f"FullScan({plan.table})"
        return f"SampleScan({plan.table},{_format_rate(plan.op.rate)})"
    left = serialize_plan(registry, registry[plan.left])
    right = serialize_plan(registry, registry[plan.right])
    return f"{plan.op.token}[d={plan.op.dop}]({left},{right})"


def plan_structure(registry: PlanRegistry, plan: PlanRecord):
    """Nested-tuple view of a plan, the reference for string round-trips."""
    if plan.is_scan:
        return ("scan", plan.op.kind.value, plan.table, plan.op.rate)
    return (
        "join",
        plan.op.kind.value,
        plan.op.dop,
        plan_structure(registry, registry[plan.left]),
        plan_structure(registry, registry[plan.right]),
    )


_TOKEN_TO_JOIN = {tok: kind for kind, tok in _JOIN_TOKENS.items()}


def parse_plan(text: str):
    """Parse a serialized plan back into its nested-tuple structure."""
    pos = 0

    def error(msg: str) -> ValueError:
        return ValueError(f"invalid plan string at position {pos}: {msg}")

    def parse_node():
        nonlocal pos
        start = pos
        while pos < len(text) and (text[pos].isalnum() or text[pos] == "_"):
            pos += 1
        token = text[start:pos]
        if token == "FullScan":
            expect("(")
            name = parse_name()
            expect(")")
            return ("scan", ScanKind.FULL.value, name, None)
        if token == "SampleScan":
            expect("(")
            name = parse_name()
            expect(",")
            rate = parse_number()
            expect(")")
            return ("scan", ScanKind.SAMPLE.value, name, rate)
        if token in _TOKEN_TO_JOIN:
            expect("[")
            expect("d")
            expect("=")
            dop = int(parse_number())
            expect("]")
            expect("(")
            left = parse_node()
            expect(",")
            right = parse_node()
            expect(")")
            return ("join", _TOKEN_TO_JOIN[token].value, dop, left, right)
        raise error(f"unknown operator token {token!r}")

    def expect(ch: str):
        nonlocal pos
        if pos >= len(text) or text[pos] != ch:
            raise error(f"expected {ch!r}")
        pos += 1

    def parse_name() -> str:
        nonlocal pos
        start = pos
        while pos < len(text) and text[pos] not in ",()[]":
            pos += 1
        if start == pos:
            raise error("expected a table name")
        return text[start:pos]

    def parse_number() -> float:
        nonlocal pos
        start = pos
        while pos < len(text) and (text[pos].isdigit() or text[pos] in ".eE+-"):
            pos += 1
        try:
            return float(text[start:pos])
        except ValueError:
            raise error("expected a number") from None

    node = parse_node()
    if pos != len(text):
        raise error("trailing characters")
    return node
