"""Tables, join queries, and cardinality estimation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Table",
    "Predicate",
    "Catalog",
    "Query",
    "PreparedQuery",
    "join_cardinality",
    "crossing_selectivity",
]


@dataclass(frozen=True)
class Table:
    """A base table: name, row count, and whether an index is available."""

    name: str
    cardinality: int
    has_index: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("table name must be non-empty")
        if int(self.cardinality) != self.cardinality or self.cardinality < 1:
            raise ValueError(f"table {self.name!r}: cardinality must be an integer >= 1")
        object.__setattr__(self, "cardinality", int(self.cardinality))


@dataclass(frozen=True)
class Predicate:
    """An equi-join predicate between two distinct tables with a selectivity."""

    left: str
    right: str
    selectivity: float

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ValueError(f"self-join predicate on table {self.left!r}")
        if not (0.0 < self.selectivity <= 1.0):
            raise ValueError(
                f"predicate {self.left}-{self.right}: selectivity must lie in (0, 1], "
                f"got {self.selectivity}"
            )

    def pair(self) -> frozenset[str]:
        return frozenset((self.left, self.right))


class Catalog:
    """An immutable collection of tables, addressable by name."""

    def __init__(self, tables: Iterable[Table]):
        self._tables = tuple(tables)
        names = [t.name for t in self._tables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate table names in catalog")
        self._by_name: Mapping[str, Table] = {t.name: t for t in self._tables}

    @property
    def tables(self) -> tuple[Table, ...]:
        return self._tables

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Table:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown table {name!r}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Catalog):
            return NotImplemented
        return self._tables == other._tables

    def __hash__(self) -> int:
        return hash(self._tables)


@dataclass(frozen=True)
class Query:
    """A join query: the tables to join plus the predicates linking them."""

    tables: tuple[str, ...]
    predicates: tuple[Predicate, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tables", tuple(self.tables))
        object.__setattr__(self, "predicates", tuple(self.predicates))
        if not self.tables:
            raise ValueError("query must reference at least one table")
        if len(set(self.tables)) != len(self.tables):
            raise ValueError("query references a table twice")

    def __len__(self) -> int:
        return len(self.tables)


def validate_query(catalog: Catalog, query: Query) -> None:
    """Check that a query is well-formed against a catalog."""
    for name in query.tables:
        if name not in catalog:
            raise ValueError(f"query references unknown table {name!r}")
    in_query = set(query.tables)
    seen_pairs: set[frozenset[str]] = set()
    for pred in query.predicates:
        for name in (pred.left, pred.right):
            if name not in in_query:
                raise ValueError(f"predicate references table {name!r} outside the query")
        if pred.pair() in seen_pairs:
            raise ValueError(f"duplicate predicate on pair {pred.left}-{pred.right}")
        seen_pairs.add(pred.pair())


def join_cardinality(card_left: float, card_right: float, selectivity: float = 1.0) -> float:
    """Estimated output rows of a join: |L| * |R| * crossing selectivity.

    A crossing selectivity of 1 models a Cartesian product.
    """
    if card_left < 0 or card_right < 0:
        raise ValueError("cardinalities must be non-negative")
    if not (0.0 < selectivity <= 1.0):
        raise ValueError(f"selectivity must lie in (0, 1], got {selectivity}")
    return float(card_left) * float(card_right) * float(selectivity)


def crossing_selectivity(query: Query, left: Iterable[str], right: Iterable[str]) -> float:
    """Product of selectivities of predicates with one endpoint on each side."""
    left, right = set(left), set(right)
    if left & right:
        raise ValueError("sides of a split must be disjoint")
    sel = 1.0
    for pred in query.predicates:
        if (pred.left in left and pred.right in right) or (
            pred.left in right and pred.right in left
        ):
            sel *= pred.selectivity
    return sel


class PreparedQuery:
    """A query bound to a catalog with bitmask table sets for fast splits.

    Table i of ``query.tables`` maps to bit ``1 << i``.  Subset enumeration,
    crossing selectivities, and cardinality lookups all work on masks.
    """

    def __init__(self, catalog: Catalog, query: Query):
        validate_query(catalog, query)
        self.catalog = catalog
        self.query = query
        self.n = len(query.tables)
        self.full_mask = (1 << self.n) - 1
        self._bit = {name: 1 << i for i, name in enumerate(query.tables)}
        self.cards = np.array(
            [float(catalog[name].cardinality) for name in query.tables], dtype=np.float64
        )
        self.indexed = tuple(catalog[name].has_index for name in query.tables)
        # (left mask, right mask, selectivity) per predicate, in query order
        self._preds = tuple(
            (self._bit[p.left], self._bit[p.right], p.selectivity) for p in query.predicates
        )
        self._full_cards: dict[int, float] = {}

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= self._bit[name]
        return mask

    def names_of(self, mask: int) -> tuple[str, ...]:
        return tuple(
            name for i, name in enumerate(self.query.tables) if mask & (1 << i)
        )

    def full_card(self, mask: int) -> float:
        """Full-data cardinality of a table set: base rows times the
        selectivities of all predicates internal to the set.

        This is a property of the set alone (every split of the set covers
        the same predicates), so it is the cardinality every plan producing
        the set is costed with.  Values are memoized along a fixed split so
        repeated lookups agree bitwise.
        """
        if mask <= 0 or mask > self.full_mask:
            raise ValueError(f"table mask {mask} out of range")
        cached = self._full_cards.get(mask)
        if cached is not None:
            return cached
        low = mask & -mask
        if mask == low:
            value = float(self.cards[low.bit_length() - 1])
        else:
            rest = mask ^ low
            value = self.full_card(low) * self.full_card(rest) * self.crossing(low, rest)
        self._full_cards[mask] = value
        return value

    def crossing(self, mask1: int, mask2: int) -> float:
        """Crossing selectivity between two disjoint table masks."""
        sel = 1.0
        for left_bit, right_bit, s in self._preds:
            if (left_bit & mask1 and right_bit & mask2) or (
                left_bit & mask2 and right_bit & mask1
            ):
                sel *= s
        return sel

    def connected(self, mask1: int, mask2: int) -> bool:
        """True iff at least one predicate crosses the two masks."""
        for left_bit, right_bit, _ in self._preds:
            if (left_bit & mask1 and right_bit & mask2) or (
                left_bit & mask2 and right_bit & mask1
            ):
                return True
        return False
