"""Find historical packed units that can serve an order.

A unit matches when every item type it contains is demanded by the order, no
quantity exceeds the order's, and the demand tags are equal.  Tag equality can
be relaxed for large merged orders, where tags have been dropped anyway.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import HistoryRecord, Order, Spu, validate_spu


@dataclass(frozen=True)
class HistoryIndex:
    """Inverted index over one month of history: item type -> spu ids."""

    by_item: Mapping[str, frozenset[str]]
    spus: Mapping[str, Spu]


def build_index(record: HistoryRecord) -> HistoryIndex:
    by_item: dict[str, set[str]] = {}
    spus: dict[str, Spu] = {}
    for spu in record.spus:
        if spu.id in spus:
            raise ValueError(f"duplicate spu id {spu.id!r} in history {record.month!r}")
        problems = validate_spu(spu)
        if problems:
            raise ValueError(problems[0])
        spus[spu.id] = spu
        for line in spu.lines:
            by_item.setdefault(line.item_type, set()).add(spu.id)
    return HistoryIndex(
        by_item={item: frozenset(ids) for item, ids in by_item.items()},
        spus=spus,
    )


def spu_matches(order: Order, spu: Spu, relax_demand: bool = False) -> bool:
    if not relax_demand and spu.demand_tag != order.demand_tag:
        return False
    demand = order.demand
    for line in spu.lines:
        wanted = demand.get(line.item_type)
        if wanted is None or line.quantity > wanted:
            return False
    return True


def matched_spus(order: Order, index: HistoryIndex, relax_demand: bool = False) -> list[Spu]:
    """All matched units for this order, sorted by spu id.

    Candidates come from the union of posting lists for the order's item
    types; any matched unit contains at least one such type, so nothing is
    missed.
    """
    candidate_ids: set[str] = set()
    for item_type in order.item_types:
        candidate_ids |= index.by_item.get(item_type, frozenset())
    out = []
    for spu_id in sorted(candidate_ids):
        spu = index.spus[spu_id]
        if spu_matches(order, spu, relax_demand):
            out.append(spu)
    return out
