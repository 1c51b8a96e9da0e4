"""Pareto plan sets: dominance-pruned candidate stores for one table set.

The insertion rule is asymmetric on purpose:

* a newcomer is rejected iff some stored member already (approximately)
  dominates it at the set's insertion factor ``alpha``;
* after an insertion, stored members are evicted only under plain
  dominance by the newcomer, never under approximate dominance.

Evicting approximately-dominated members would let coverage drift by a
factor alpha per eviction chain, which is exactly the failure mode the
asymmetry exists to rule out.  With ``alpha == 1`` both rules collapse to
plain dominance and the set maintains the exact Pareto frontier of
everything offered to it.

Members that share a full log-grid bucket vector (`grid_bucket`) mutually
approximately dominate each other, so a set pruned at ``alpha > 1`` never
stores two plans in the same bucket; that is what bounds its size.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import GridUndefinedError
from .plans import PlanRecord

__all__ = ["PlanSet", "grid_bucket", "pareto_mask", "ZERO_BUCKET"]

# marker for zero entries, which live outside the logarithmic grid
ZERO_BUCKET = None


def grid_bucket(cost: Sequence[float], alpha: float) -> tuple:
    """Per-objective bucket indices floor(log_alpha(entry)); zeros get ZERO_BUCKET.

    Undefined for ``alpha == 1`` (the grid degenerates), hence
    `GridUndefinedError`.
    """
    alpha = float(alpha)
    if alpha <= 1.0:
        raise GridUndefinedError(f"log-grid needs alpha > 1, got {alpha}")
    log_alpha = math.log(alpha)
    out = []
    for x in cost:
        if x < 0:
            raise ValueError(f"cost entries must be non-negative, got {x}")
        out.append(ZERO_BUCKET if x == 0.0 else math.floor(math.log(x) / log_alpha))
    return tuple(out)


def pareto_mask(costs: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any distinct other row.

    Among equal rows, only the first is kept, so the selected rows are
    pairwise distinct and mutually non-dominated.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n = costs.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = (costs <= costs[i]).all(axis=1)
        if (le & (costs < costs[i]).any(axis=1)).any():
            keep[i] = False
            continue
        duplicates = le.copy()  # equal rows, since nothing is strictly below
        duplicates[i] = False
        keep[duplicates] = False
    return keep


class PlanSet:
    """Mutable store of mutually non-dominated plans for one table set.

    Costs, output cardinalities, and plan ids live in parallel arrays so
    candidate blocks can be filtered with vectorized dominance masks.
    """

    __slots__ = ("table_mask", "alpha", "_costs", "_cards", "_ids", "_n")

    def __init__(self, table_mask: int, n_columns: int, alpha: float = 1.0):
        if alpha < 1.0:
            raise ValueError(f"insertion factor must be >= 1, got {alpha}")
        self.table_mask = table_mask
        self.alpha = float(alpha)
        self._costs = np.empty((8, n_columns), dtype=np.float64)
        self._cards = np.empty(8, dtype=np.float64)
        self._ids = np.empty(8, dtype=np.int64)
        self._n = 0

    # -- views ----------------------------------------------------------------

    @property
    def count(self) -> int:
        return self._n

    @property
    def costs(self) -> np.ndarray:
        return self._costs[: self._n]

    @property
    def cards(self) -> np.ndarray:
        return self._cards[: self._n]

    @property
    def plan_ids(self) -> np.ndarray:
        return self._ids[: self._n]

    def __len__(self) -> int:
        return self._n

    # -- pruning ----------------------------------------------------------------

    def admits(self, cost: np.ndarray) -> bool:
        """Insertion test: no stored member approx-dominates the newcomer."""
        if self._n == 0:
            return True
        members = self._costs[: self._n]
        if self.alpha == 1.0:
            dominated = (members <= cost).all(axis=1).any()
        else:
            dominated = (members <= cost * self.alpha).all(axis=1).any()
        return not bool(dominated)

    def admits_mask(self, block: np.ndarray) -> np.ndarray:
        """Vectorized `admits` over a (b, C) candidate block."""
        if self._n == 0:
            return np.ones(block.shape[0], dtype=bool)
        members = self._costs[: self._n]
        scaled = block if self.alpha == 1.0 else block * self.alpha
        dominated = (members[None, :, :] <= scaled[:, None, :]).all(axis=2).any(axis=1)
        return ~dominated

    def insert(self, cost: np.ndarray, card: float, plan_id: int) -> None:
        """Append an admitted plan, evicting members it plainly dominates."""
        n = self._n
        if n:
            keep = ~(cost <= self._costs[:n]).all(axis=1)
            if not keep.all():
                k = int(keep.sum())
                self._costs[:k] = self._costs[:n][keep]
                self._cards[:k] = self._cards[:n][keep]
                self._ids[:k] = self._ids[:n][keep]
                n = k
        if n == self._costs.shape[0]:
            self._grow()
        self._costs[n] = cost
        self._cards[n] = card
        self._ids[n] = plan_id
        self._n = n + 1

    def prune(self, plan: PlanRecord) -> bool:
        """Offer a plan record to the set; True iff it was inserted."""
        if plan.tables != self.table_mask:
            raise ValueError(
                f"plan covers table mask {plan.tables:#x}, set holds {self.table_mask:#x}"
            )
        cost = np.asarray(plan.cost, dtype=np.float64)
        if cost.shape[0] != self._costs.shape[1]:
            raise ValueError(
                f"plan has {cost.shape[0]} cost columns, set stores {self._costs.shape[1]}"
            )
        if not self.admits(cost):
            return False
        self.insert(cost, plan.out_card, plan.plan_id)
        return True

    def clear(self) -> None:
        self._n = 0

    def _grow(self) -> None:
        old = self._costs.shape[0]
        cap = old * 2
        costs = np.empty((cap, self._costs.shape[1]), dtype=np.float64)
        cards = np.empty(cap, dtype=np.float64)
        ids = np.empty(cap, dtype=np.int64)
        costs[:old] = self._costs
        cards[:old] = self._cards
        ids[:old] = self._ids
        self._costs, self._cards, self._ids = costs, cards, ids
