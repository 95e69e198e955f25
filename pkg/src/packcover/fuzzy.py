"""Greedy fuzzy-match baseline.

Repeatedly picks the matched unit covering the most remaining quantity (ties:
fewer leftover item types afterwards, then lowest id) as long as it still
fits under what remains.  No lookahead, so it can strand quantity that an
exact-cover search would have placed; a stall with items remaining is a
failure and is reported as an infeasible Solution whose slack holds the
stranded items.
"""
from __future__ import annotations

from typing import Sequence

from .colgen import spu_to_column
from .model import (
    STATUS_FEASIBLE,
    STATUS_INFEASIBLE,
    Order,
    Solution,
    Spu,
)


def fuzzy_match_solve(order: Order, matched: Sequence[Spu]) -> Solution:
    remaining = order.demand
    columns = {}
    counts: dict[str, int] = {}
    objective = 0.0

    def fits(spu: Spu) -> bool:
        return all(q <= remaining[t] for t, q in spu.quantities.items())

    def leftover_types_after(spu: Spu) -> int:
        quantities = spu.quantities
        return sum(
            1 for t, q in remaining.items() if q - quantities.get(t, 0) > 0
        )

    while any(remaining.values()):
        best = None
        best_key = None
        for spu in matched:
            if not fits(spu):
                continue
            key = (-spu.total_quantity(), leftover_types_after(spu), spu.id)
            if best_key is None or key < best_key:
                best, best_key = spu, key
        if best is None:
            break
        for t, q in best.quantities.items():
            remaining[t] -= q
        counts[best.id] = counts.get(best.id, 0) + 1
        columns[best.id] = spu_to_column(best)
        objective += best.cost

    status = STATUS_INFEASIBLE if any(remaining.values()) else STATUS_FEASIBLE
    return Solution(
        column_counts=counts,
        heuristic_slack=dict(remaining),
        objective=objective,
        status=status,
        columns=columns,
    )
