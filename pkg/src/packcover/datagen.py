"""Seeded synthetic orders plus a matching history record.

Orders draw their item types from a fixed universe with Zipf popularity, so
popular items recur across orders and history fragments actually match
foreign orders.  History is built by fragmenting randomly chosen orders into
a few sub-units and keeping each fragment with some probability: every kept
fragment is a matched unit of its source order by construction, but a full
partition rarely survives, so exact covers stay hard to find and success
rates land well under 100%.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import HistoryRecord, ItemLine, Order, Spu


@dataclass(frozen=True)
class Profile:
    """Knobs for one dataset family; quantities are means, not bounds."""

    name: str
    universe_size: int = 200
    zipf_exponent: float = 1.05
    mean_item_types: float = 5.64
    mean_total_quantity: float = 54.49
    fragments_min: int = 2
    fragments_max: int = 6
    fragment_keep_prob: float = 0.55
    month: str = "2025-12"

    def validate(self) -> None:
        if self.universe_size < 1:
            raise ValueError("universe_size must be >= 1")
        if self.mean_item_types < 1.0:
            raise ValueError("mean_item_types must be >= 1")
        if self.mean_total_quantity < self.mean_item_types:
            raise ValueError("mean_total_quantity must be >= mean_item_types")
        if not 1 <= self.fragments_min <= self.fragments_max:
            raise ValueError("need 1 <= fragments_min <= fragments_max")
        if not 0.0 < self.fragment_keep_prob <= 1.0:
            raise ValueError("fragment_keep_prob must be in (0, 1]")


PROFILES = {
    "paper": Profile("paper"),
    # small and quick: unit tests and toy training corpora
    "tiny": Profile(
        "tiny",
        universe_size=30,
        mean_item_types=2.5,
        mean_total_quantity=10.0,
        fragments_max=4,
    ),
}


def _resolve(profile: str | Profile) -> Profile:
    if isinstance(profile, Profile):
        prof = profile
    else:
        try:
            prof = PROFILES[profile]
        except KeyError:
            raise ValueError(
                f"unknown profile {profile!r}, have {sorted(PROFILES)}"
            ) from None
    prof.validate()
    return prof


def _item_weights(prof: Profile) -> np.ndarray:
    ranks = np.arange(1, prof.universe_size + 1, dtype=float)
    w = ranks ** -prof.zipf_exponent
    return w / w.sum()


def _item_name(rank: int) -> str:
    return f"itm{rank:03d}"


def _draw_order(rng: np.random.Generator, prof: Profile, weights, oid: str) -> Order:
    k = 1 + int(rng.poisson(prof.mean_item_types - 1.0))
    k = min(k, prof.universe_size)
    ranks = rng.choice(prof.universe_size, size=k, replace=False, p=weights)
    # per-type quantity is geometric; its mean times the type-count mean
    # gives the configured total-quantity mean
    p = prof.mean_item_types / prof.mean_total_quantity
    lines = tuple(
        ItemLine(_item_name(r), int(rng.geometric(p))) for r in np.sort(ranks)
    )
    return Order(id=oid, lines=lines, demand_tag="")


def _fragment(rng: np.random.Generator, order: Order, prof: Profile) -> list[dict[str, int]]:
    f = int(rng.integers(prof.fragments_min, prof.fragments_max + 1))
    parts: list[dict[str, int]] = [{} for _ in range(f)]
    share = np.full(f, 1.0 / f)
    for line in order.lines:
        for i, q in enumerate(rng.multinomial(line.quantity, share)):
            if q:
                parts[i][line.item_type] = int(q)
    return [part for part in parts if part]


def generate_dataset(
    n_orders: int,
    n_history_spus: int,
    rng_seed: int = 0,
    profile: str | Profile = "paper",
) -> tuple[list[Order], HistoryRecord]:
    """n_orders synthetic orders and a history of n_history_spus units."""
    if n_orders < 1 or n_history_spus < 1:
        raise ValueError("sizes must be >= 1")
    prof = _resolve(profile)
    rng = np.random.default_rng(rng_seed)
    weights = _item_weights(prof)
    orders = [
        _draw_order(rng, prof, weights, f"ord-{i:05d}") for i in range(n_orders)
    ]
    spus: list[Spu] = []
    while len(spus) < n_history_spus:
        source = orders[int(rng.integers(0, n_orders))]
        for part in _fragment(rng, source, prof):
            if rng.random() > prof.fragment_keep_prob:
                continue
            if len(spus) >= n_history_spus:
                break
            lines = tuple(ItemLine(t, q) for t, q in sorted(part.items()))
            spus.append(
                Spu(
                    id=f"spu-{len(spus):06d}",
                    lines=lines,
                    cost=1.0,
                    demand_tag=source.demand_tag,
                    source_month=prof.month,
                )
            )
    return orders, HistoryRecord(month=prof.month, spus=tuple(spus))


def combine_orders(orders: list[Order], K: int, rng_seed: int = 0) -> list[Order]:
    """Merge disjoint random groups of K orders by summing quantities.

    Tags are dropped: a merged order is a pure quantity profile.  K=1 keeps
    the input sequence (identity up to the tag), larger K shuffles before
    grouping; the remainder orders are discarded.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if K == 1:
        return [Order(o.id, o.lines, demand_tag="") for o in orders]
    rng = np.random.default_rng(rng_seed)
    perm = [orders[i] for i in rng.permutation(len(orders))]
    out: list[Order] = []
    for g in range(len(orders) // K):
        chunk = perm[g * K : (g + 1) * K]
        demand: dict[str, int] = {}
        for order in chunk:
            for line in order.lines:
                demand[line.item_type] = demand.get(line.item_type, 0) + line.quantity
        out.append(
            Order(
                id="+".join(o.id for o in chunk),
                lines=tuple(ItemLine(t, q) for t, q in sorted(demand.items())),
                demand_tag="",
            )
        )
    return out
