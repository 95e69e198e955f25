"""Matched-SPU retrieval against a direct definition scan."""
from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from packcover.matcher import build_index, matched_spus, spu_matches
from packcover.model import HistoryRecord, ItemLine, Order, Spu

from oracles import naive_matched_ids

TYPES = "ABCDEF"


def mk_order(demand, tag=""):
    return Order("o", tuple(ItemLine(t, q) for t, q in sorted(demand.items())), tag)


def mk_spu(sid, lines, tag=""):
    return Spu(sid, tuple(ItemLine(t, q) for t, q in sorted(lines.items())), 1.0, tag)


def index_of(pool):
    return build_index(HistoryRecord("2025-12", tuple(pool)))


@st.composite
def spu_pools(draw):
    n = draw(st.integers(0, 12))
    pool = []
    for i in range(n):
        types = draw(
            st.lists(st.sampled_from(TYPES), unique=True, min_size=1, max_size=3)
        )
        lines = {t: draw(st.integers(1, 6)) for t in types}
        pool.append(mk_spu(f"s{i}", lines, draw(st.sampled_from(["", "g"]))))
    return pool


@st.composite
def demands(draw):
    types = draw(st.lists(st.sampled_from(TYPES), unique=True, min_size=1, max_size=4))
    return {t: draw(st.integers(1, 8)) for t in types}


def test_single_worked_example():
    order = mk_order({"A": 2, "B": 4, "C": 5}, tag="ratio B:A=2")
    pool = [
        mk_spu("SPU1", {"A": 1, "B": 2}, tag="ratio B:A=2"),
        mk_spu("SPU2", {"A": 1, "D": 2}, tag="ratio B:A=2"),  # D not demanded
        mk_spu("SPU3", {"A": 1, "B": 3}, tag=""),  # wrong ratio requirement
    ]
    index = index_of(pool)
    strict = matched_spus(order, index)
    assert [s.id for s in strict] == ["SPU1"]
    relaxed = matched_spus(order, index, relax_demand=True)
    assert [s.id for s in relaxed] == ["SPU1", "SPU3"]


def test_quantity_overflow_not_a_match():
    order = mk_order({"A": 4, "B": 2})
    index = index_of([mk_spu("big", {"A": 2, "B": 3})])
    assert matched_spus(order, index) == []


def test_boundary_quantity_is_a_match():
    order = mk_order({"A": 2, "B": 1})
    spu = mk_spu("s0", {"A": 2, "B": 1})
    assert spu_matches(order, spu)
    assert spu_matches(order, mk_spu("s1", {"A": 2}))
    assert not spu_matches(order, mk_spu("s2", {"A": 3}))


def test_duplicate_spu_id_rejected():
    pool = [mk_spu("dup", {"A": 1}), mk_spu("dup", {"B": 1})]
    with pytest.raises(ValueError, match="dup"):
        index_of(pool)


def test_invalid_spu_rejected():
    with pytest.raises(ValueError, match="quantity"):
        index_of([mk_spu("bad", {"A": 0})])


def test_results_sorted_by_id():
    order = mk_order({"A": 5})
    pool = [mk_spu(sid, {"A": 1}) for sid in ("z", "a", "m")]
    index = index_of(pool)
    assert [s.id for s in matched_spus(order, index)] == ["a", "m", "z"]


@settings(max_examples=200)
@given(demands(), spu_pools(), st.sampled_from(["", "g"]), st.booleans())
def test_agrees_with_direct_scan(demand, pool, tag, relax):
    order = mk_order(demand, tag)
    index = index_of(pool)
    got = [s.id for s in matched_spus(order, index, relax_demand=relax)]
    assert got == naive_matched_ids(order, pool, relax_demand=relax)


@given(demands(), spu_pools(), st.sampled_from(["", "g"]))
def test_strict_subset_of_relaxed(demand, pool, tag):
    order = mk_order(demand, tag)
    index = index_of(pool)
    strict = {s.id for s in matched_spus(order, index)}
    relaxed = {s.id for s in matched_spus(order, index, relax_demand=True)}
    assert strict <= relaxed


@given(demands(), spu_pools(), st.sampled_from(["", "g"]))
def test_matches_grow_with_demand(demand, pool, tag):
    order = mk_order(demand, tag)
    bigger = mk_order({t: q + 1 for t, q in demand.items()}, tag)
    index = index_of(pool)
    small = {s.id for s in matched_spus(order, index)}
    large = {s.id for s in matched_spus(bigger, index)}
    assert small <= large
