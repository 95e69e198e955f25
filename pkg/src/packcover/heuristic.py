"""First-fit-decreasing fallback packer.

Items the covering program could not place are packed into synthetic columns,
at most `capacity` items each.  Stands in for the physical 3D packer: any
leftover batch is always packable, this just decides into how many units.
"""
from __future__ import annotations

from typing import Mapping

from .model import PROVENANCE_HEURISTIC, Column


def pack_leftovers(leftover: Mapping[str, int], capacity: int, id_prefix: str = "heur") -> list[Column]:
    """Pack leftover item counts into columns of at most `capacity` items.

    Types are taken largest count first and split freely across columns, so
    exactly ceil(total / capacity) columns come out, each with cost 1.
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    for item, count in leftover.items():
        if count < 0:
            raise ValueError(f"negative leftover count for {item!r}")

    remaining = {t: int(c) for t, c in leftover.items() if c > 0}
    columns: list[Column] = []
    current: dict[str, int] = {}
    room = capacity

    def flush():
        nonlocal current, room
        if current:
            columns.append(
                Column(
                    id=f"{id_prefix}-{len(columns) + 1}",
                    coeffs=dict(current),
                    cost=1.0,
                    provenance=PROVENANCE_HEURISTIC,
                )
            )
        current = {}
        room = capacity

    for item in sorted(remaining, key=lambda t: (-remaining[t], t)):
        count = remaining[item]
        while count > 0:
            take = min(room, count)
            current[item] = current.get(item, 0) + take
            count -= take
            room -= take
            if room == 0:
                flush()
    flush()
    return columns
