"""Domain types for history-driven order packing.

An order demands integer quantities of distinct item types.  History supplies
previously packed units (SPUs); a packing plan covers the order's demand
exactly with nonnegative integer counts of columns derived from those units,
plus a per-item slack for whatever no column covers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

PROVENANCE_MATCHED = "matched-history"
PROVENANCE_HEURISTIC = "heuristic"
PROVENANCE_SLACK = "artificial-slack"
PROVENANCES = (PROVENANCE_MATCHED, PROVENANCE_HEURISTIC, PROVENANCE_SLACK)

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible"
STATUS_INFEASIBLE = "infeasible"
STATUS_ITERATION_LIMIT = "iteration-limit"
STATUSES = (STATUS_OPTIMAL, STATUS_FEASIBLE, STATUS_INFEASIBLE, STATUS_ITERATION_LIMIT)


@dataclass(frozen=True)
class ItemLine:
    item_type: str
    quantity: int


@dataclass(frozen=True)
class Order:
    """A demand: distinct item types with positive integer quantities."""

    id: str
    lines: tuple[ItemLine, ...]
    demand_tag: str = ""

    @property
    def demand(self) -> dict[str, int]:
        return {line.item_type: line.quantity for line in self.lines}

    @property
    def item_types(self) -> tuple[str, ...]:
        return tuple(line.item_type for line in self.lines)

    def total_quantity(self) -> int:
        return sum(line.quantity for line in self.lines)


@dataclass(frozen=True)
class Spu:
    """A standard packed unit observed in history."""

    id: str
    lines: tuple[ItemLine, ...]
    cost: float = 1.0
    demand_tag: str = ""
    source_month: str | None = None

    @property
    def quantities(self) -> dict[str, int]:
        return {line.item_type: line.quantity for line in self.lines}

    def total_quantity(self) -> int:
        return sum(line.quantity for line in self.lines)


@dataclass(frozen=True)
class HistoryRecord:
    month: str
    spus: tuple[Spu, ...]


@dataclass(frozen=True)
class Column:
    """One column of the covering program.

    coeffs maps item type to a positive coefficient; item types must all
    belong to the order being solved.  Matched columns reference their source
    SPU, heuristic and slack columns are synthesized.
    """

    id: str
    coeffs: Mapping[str, int]
    cost: float
    provenance: str
    spu_ref: str | None = None

    def covers(self) -> int:
        return sum(self.coeffs.values())


@dataclass(frozen=True)
class Solution:
    """A packing plan for one order.

    column_counts holds counts of history-derived columns only.
    heuristic_slack (one entry per order item) counts items NOT covered by
    those columns: items packed by the fallback heuristic, or simply left
    uncovered in pure set-cover mode.  Exactness:

        sum_i coeffs[i][j] * column_counts[i] + heuristic_slack[j] == demand[j]

    columns carries every referenced column so provenance and coefficients
    survive serialization; heuristic_column_counts records how the slack
    portion was realized by the heuristic packer, when it ran.
    """

    column_counts: dict[str, int]
    heuristic_slack: dict[str, int]
    objective: float
    status: str
    columns: dict[str, Column] = field(default_factory=dict)
    heuristic_column_counts: dict[str, int] = field(default_factory=dict)

    def is_exact_cover(self) -> bool:
        """True when no items were left to slack or the heuristic."""
        return all(v == 0 for v in self.heuristic_slack.values())


def validate_order(order: Order) -> list[str]:
    """Return human-readable violations; empty list means valid."""
    problems = []
    if not order.id:
        problems.append("order id is empty")
    if not order.lines:
        problems.append("order has no item lines")
    seen = set()
    for line in order.lines:
        if not line.item_type:
            problems.append("item line with empty item type")
        if line.item_type in seen:
            problems.append(f"duplicate item type {line.item_type!r}")
        seen.add(line.item_type)
        if line.quantity < 1:
            problems.append(f"nonpositive quantity for {line.item_type!r}")
    return problems


def validate_spu(spu: Spu) -> list[str]:
    problems = []
    if not spu.id:
        problems.append("spu id is empty")
    if not spu.lines:
        problems.append(f"spu {spu.id!r} has no item lines")
    seen = set()
    for line in spu.lines:
        if line.item_type in seen:
            problems.append(f"spu {spu.id!r}: duplicate item type {line.item_type!r}")
        seen.add(line.item_type)
        if line.quantity < 1:
            problems.append(f"spu {spu.id!r}: nonpositive quantity for {line.item_type!r}")
    if spu.cost <= 0:
        problems.append(f"spu {spu.id!r}: cost must be positive")
    return problems


def exact_cover_violations(order: Order, solution: Solution) -> list[str]:
    """Check the Solution exactness invariant with pure integer arithmetic."""
    problems = []
    covered = {t: 0 for t in order.item_types}
    for col_id, count in solution.column_counts.items():
        col = solution.columns.get(col_id)
        if col is None:
            problems.append(f"count references unknown column {col_id!r}")
            continue
        if count < 0:
            problems.append(f"negative count for column {col_id!r}")
        for item, coeff in col.coeffs.items():
            if item not in covered:
                problems.append(f"column {col_id!r} covers {item!r} not in order")
            else:
                covered[item] += coeff * count
    for item, quantity in order.demand.items():
        slack = solution.heuristic_slack.get(item, 0)
        if slack < 0:
            problems.append(f"negative slack for {item!r}")
        if covered.get(item, 0) + slack != quantity:
            problems.append(
                f"item {item!r}: covered {covered.get(item, 0)} + slack {slack} != demand {quantity}"
            )
    # the heuristic realization, when present, must account for the slack exactly
    if solution.heuristic_column_counts:
        packed = {t: 0 for t in order.item_types}
        for col_id, count in solution.heuristic_column_counts.items():
            col = solution.columns.get(col_id)
            if col is None:
                problems.append(f"heuristic count references unknown column {col_id!r}")
                continue
            for item, coeff in col.coeffs.items():
                packed[item] = packed.get(item, 0) + coeff * count
        for item, amount in packed.items():
            if amount != solution.heuristic_slack.get(item, 0):
                problems.append(
                    f"item {item!r}: heuristic columns pack {amount}, slack says "
                    f"{solution.heuristic_slack.get(item, 0)}"
                )
    return problems


# ---------------------------------------------------------------------------
# Serialization.  JSON Lines, one object per line, UTF-8, LF.  Field names:
# id, lines, demand_tag, cost, month.  Lines are [item_type, quantity] pairs
# so parse(serialize(x)) == x including line order.
# ---------------------------------------------------------------------------


def _lines_to_json(lines: Iterable[ItemLine]) -> list[list]:
    return [[line.item_type, line.quantity] for line in lines]


def _lines_from_json(raw) -> tuple[ItemLine, ...]:
    return tuple(ItemLine(str(t), int(q)) for t, q in raw)


def order_to_dict(order: Order) -> dict:
    return {
        "id": order.id,
        "lines": _lines_to_json(order.lines),
        "demand_tag": order.demand_tag,
    }


def order_from_dict(raw: Mapping) -> Order:
    return Order(
        id=str(raw["id"]),
        lines=_lines_from_json(raw["lines"]),
        demand_tag=str(raw.get("demand_tag", "")),
    )


def spu_to_dict(spu: Spu) -> dict:
    out = {
        "id": spu.id,
        "lines": _lines_to_json(spu.lines),
        "demand_tag": spu.demand_tag,
        "cost": spu.cost,
    }
    if spu.source_month is not None:
        out["month"] = spu.source_month
    return out


def spu_from_dict(raw: Mapping) -> Spu:
    return Spu(
        id=str(raw["id"]),
        lines=_lines_from_json(raw["lines"]),
        cost=float(raw.get("cost", 1.0)),
        demand_tag=str(raw.get("demand_tag", "")),
        source_month=raw.get("month"),
    )


def column_to_dict(col: Column) -> dict:
    return {
        "id": col.id,
        "coeffs": dict(sorted(col.coeffs.items())),
        "cost": col.cost,
        "provenance": col.provenance,
        "spu_ref": col.spu_ref,
    }


def column_from_dict(raw: Mapping) -> Column:
    return Column(
        id=str(raw["id"]),
        coeffs={str(t): int(q) for t, q in raw["coeffs"].items()},
        cost=float(raw["cost"]),
        provenance=str(raw["provenance"]),
        spu_ref=raw.get("spu_ref"),
    )


def solution_to_dict(solution: Solution) -> dict:
    return {
        "column_counts": dict(sorted(solution.column_counts.items())),
        "heuristic_slack": dict(sorted(solution.heuristic_slack.items())),
        "objective": solution.objective,
        "status": solution.status,
        "columns": [column_to_dict(c) for _, c in sorted(solution.columns.items())],
        "heuristic_column_counts": dict(sorted(solution.heuristic_column_counts.items())),
    }


def solution_from_dict(raw: Mapping) -> Solution:
    columns = {c["id"]: column_from_dict(c) for c in raw.get("columns", [])}
    return Solution(
        column_counts={str(k): int(v) for k, v in raw["column_counts"].items()},
        heuristic_slack={str(k): int(v) for k, v in raw["heuristic_slack"].items()},
        objective=float(raw["objective"]),
        status=str(raw["status"]),
        columns=columns,
        heuristic_column_counts={
            str(k): int(v) for k, v in raw.get("heuristic_column_counts", {}).items()
        },
    )


def dumps_canonical(obj) -> str:
    """Stable single-line JSON; used everywhere a file must be reproducible."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_jsonl(path, dicts: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in dicts:
            fh.write(dumps_canonical(d))
            fh.write("\n")


def read_jsonl(path) -> Iterable[tuple[int, dict]]:
    """Yield (line_number, parsed) pairs; raise ValueError with the 1-based
    line number on malformed input."""
    with open(path, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield number, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {number}: invalid JSON ({exc.msg})") from exc


def load_orders(path) -> list[Order]:
    orders = []
    for number, raw in read_jsonl(path):
        try:
            order = order_from_dict(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: line {number}: bad order record ({exc})") from exc
        problems = validate_order(order)
        if problems:
            raise ValueError(f"{path}: line {number}: {problems[0]}")
        orders.append(order)
    return orders


def save_orders(path, orders: Iterable[Order]) -> None:
    write_jsonl(path, (order_to_dict(o) for o in orders))


def load_history(path) -> HistoryRecord:
    spus = []
    month = ""
    for number, raw in read_jsonl(path):
        try:
            spu = spu_from_dict(raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: line {number}: bad spu record ({exc})") from exc
        problems = validate_spu(spu)
        if problems:
            raise ValueError(f"{path}: line {number}: {problems[0]}")
        if spu.source_month and not month:
            month = spu.source_month
        spus.append(spu)
    return HistoryRecord(month=month, spus=tuple(spus))


def save_history(path, record: HistoryRecord) -> None:
    dicts = []
    for spu in record.spus:
        if spu.source_month is None and record.month:
            spu = Spu(spu.id, spu.lines, spu.cost, spu.demand_tag, record.month)
        dicts.append(spu_to_dict(spu))
    write_jsonl(path, dicts)
