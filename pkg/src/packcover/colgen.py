"""Column generation over historical packing columns.

The restricted master problem covers an order's demand exactly with integer
counts of columns.  It always carries one artificial-slack column per item
with a dominant cost, so the LP is feasible from the start (identity basis)
and minimizing cost is lexicographic: first as few slack items as possible,
then cheapest real columns.  Pricing scans the remaining matched candidates
for the most negative reduced cost; there is no combinatorial subproblem,
history is the column pool.
"""
from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .heuristic import pack_leftovers
from .lp import SimplexError, simplex_solve
from .model import (
    PROVENANCE_HEURISTIC,
    PROVENANCE_MATCHED,
    PROVENANCE_SLACK,
    STATUS_INFEASIBLE,
    STATUS_ITERATION_LIMIT,
    STATUS_OPTIMAL,
    Column,
    Order,
    Solution,
    Spu,
)

DEFAULT_EPSILON = 1e-9
_INT_TOL = 1e-6


@dataclass(frozen=True)
class ColGenConfig:
    max_iters: int = 500
    epsilon: float = DEFAULT_EPSILON
    warm_start_size: int = 30
    heuristic_capacity: int = 60
    heuristic_enabled: bool = True
    relax_demand: bool = False
    rng_seed: int = 0
    admit_per_iter: int = 1
    node_limit: int = 100_000

    def validate(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.warm_start_size < 0:
            raise ValueError("warm_start_size must be >= 0")
        if self.heuristic_capacity < 1:
            raise ValueError("heuristic_capacity must be >= 1")
        if self.admit_per_iter < 1:
            raise ValueError("admit_per_iter must be >= 1")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    lp_objective: float
    column_id: str
    reduced_cost: float


@dataclass
class ColGenState:
    """Working state of one solve; kept around for diagnostics and for
    emitting training data (iteration-0 duals, admissions)."""

    order: Order
    candidates: list[Column]
    in_rmp: list[Column]
    iteration: int = 0
    duals: dict[str, float] | None = None
    trace: list[TraceEntry] = field(default_factory=list)
    duals_iter0: dict[str, float] | None = None
    final_lp_objective: float | None = None
    warm_solution: Solution | None = None
    initial_ids: list[str] = field(default_factory=list)


def spu_to_column(spu: Spu) -> Column:
    return Column(
        id=spu.id,
        coeffs=spu.quantities,
        cost=spu.cost,
        provenance=PROVENANCE_MATCHED,
        spu_ref=spu.id,
    )


def slack_cost(order: Order, columns: Iterable[Column]) -> float:
    """A per-item slack cost high enough that any plan using slack costs more
    than any plan without: total demand times the priciest column, plus one.
    Integer whenever the column costs are."""
    max_cost = max((c.cost for c in columns), default=1.0)
    return 1.0 + order.total_quantity() * max(1.0, math.ceil(max_cost))


def make_slack_columns(order: Order, cost: float) -> list[Column]:
    return [
        Column(
            id=f"slack::{line.item_type}",
            coeffs={line.item_type: 1},
            cost=cost,
            provenance=PROVENANCE_SLACK,
        )
        for line in order.lines
    ]


def reduced_cost(column: Column, duals: Mapping[str, float]) -> float:
    return column.cost - sum(q * duals.get(t, 0.0) for t, q in column.coeffs.items())


def price_from_history(
    candidates: Sequence[Column],
    duals: Mapping[str, float],
    epsilon: float = DEFAULT_EPSILON,
) -> Column | None:
    """Most negative reduced-cost candidate, or None at optimality.

    One linear scan; ties broken by smallest reduced cost then lowest id.
    """
    best = None
    best_key = None
    for col in candidates:
        key = (reduced_cost(col, duals), col.id)
        if best_key is None or key < best_key:
            best, best_key = col, key
    if best is None or best_key[0] >= -epsilon:
        return None
    return best


def _price_batch(candidates, duals, epsilon, limit):
    scored = sorted(
        ((reduced_cost(c, duals), c.id, c) for c in candidates),
        key=lambda t: (t[0], t[1]),
    )
    return [(c, delta) for delta, _, c in scored[:limit] if delta < -epsilon]


# ---------------------------------------------------------------------------
# Integer solves: best-first branch and bound with LP bounding.
# ---------------------------------------------------------------------------


def _build_solution(columns, counts, rhs, status) -> Solution:
    column_counts: dict[str, int] = {}
    heur_counts: dict[str, int] = {}
    used: dict[str, Column] = {}
    covered = {t: 0 for t in rhs}
    objective = 0.0
    for col, k in zip(columns, counts):
        k = int(k)
        if k <= 0:
            continue
        used[col.id] = col
        objective += col.cost * k
        if col.provenance == PROVENANCE_MATCHED:
            column_counts[col.id] = k
            for t, q in col.coeffs.items():
                covered[t] += q * k
        elif col.provenance == PROVENANCE_HEURISTIC:
            heur_counts[col.id] = k
    slack = {t: rhs[t] - covered[t] for t in rhs}
    return Solution(
        column_counts=column_counts,
        heuristic_slack=slack,
        objective=objective,
        status=status,
        columns=used,
        heuristic_column_counts=heur_counts,
    )


def _node_lp(costs, matrix, rhs, lower, upper):
    """LP relaxation under per-variable bounds.

    Lower bounds are shifted away; finite upper bounds become extra rows
    with one slack each.  Returns (x, objective) in the original variable
    space, or None when infeasible.
    """
    n = matrix.shape[1]
    lower_arr = np.array(lower, dtype=float)
    shifted_rhs = rhs - matrix @ lower_arr
    const = float(costs @ lower_arr)

    free = []
    bounded = []  # (free-position, residual upper bound)
    for j in range(n):
        room = None if upper[j] is None else upper[j] - lower[j]
        if room is not None and room < 0:
            return None
        if room == 0:
            continue
        if room is not None:
            bounded.append((len(free), room))
        free.append(j)
    if not free:
        if np.max(np.abs(shifted_rhs)) > 1e-9:
            return None
        return lower_arr, const

    sub = matrix[:, free]
    k = len(bounded)
    rows = sub.shape[0] + k
    work = np.zeros((rows, len(free) + k))
    work[: sub.shape[0], : len(free)] = sub
    work_rhs = np.concatenate([shifted_rhs, np.zeros(k)])
    work_costs = np.concatenate([costs[free], np.zeros(k)])
    for extra, (pos, room) in enumerate(bounded):
        row = sub.shape[0] + extra
        work[row, pos] = 1.0
        work[row, len(free) + extra] = 1.0
        work_rhs[row] = room
    status, x, _, objective, _ = simplex_solve(work_costs, work, work_rhs)
    if status != "optimal":
        if status == "unbounded":
            raise SimplexError("bounded-cost node LP cannot be unbounded")
        return None
    full = lower_arr.copy()
    for pos, j in enumerate(free):
        full[j] += x[pos]
    return full, objective + const


def solve_ip(
    columns: Sequence[Column],
    rhs: Mapping[str, int],
    costs: Sequence[float],
    *,
    node_limit: int = 100_000,
    incumbent_counts: Sequence[int] | None = None,
) -> Solution:
    """Exact-cover integer program over the given columns.

    Best-first branch and bound on the LP bound, branching floor/ceil on the
    most fractional variable; among equal bounds the deeper node wins, so the
    search dives for incumbents early.  Columns with identical coefficients
    collapse to the cheapest representative, and every node's fractional
    solution is floored and greedily completed into a feasible candidate.
    An optional starting incumbent (count per column, must be feasible) seeds
    the upper bound; ties never displace the incumbent, so re-solving an
    already-optimal plan returns it unchanged.
    """
    items = list(rhs)
    index = {t: i for i, t in enumerate(items)}
    for col in columns:
        for t in col.coeffs:
            if t not in index:
                raise ValueError(f"column {col.id!r} covers {t!r}, not demanded")
    c_all = np.asarray(costs, dtype=float).reshape(-1)
    if c_all.size != len(columns):
        raise ValueError(f"{len(columns)} columns but {c_all.size} costs")

    # identical coefficient vectors are interchangeable; keep the cheapest
    rep_of: dict[tuple, int] = {}
    keep: list[int] = []
    rep_index: list[int] = []
    for j, col in enumerate(columns):
        key = tuple(sorted(col.coeffs.items()))
        r = rep_of.get(key)
        if r is None:
            rep_of[key] = len(keep)
            rep_index.append(len(keep))
            keep.append(j)
        elif c_all[j] < c_all[keep[r]] - 1e-12:
            keep[r] = j
            rep_index.append(r)
        else:
            rep_index.append(r)
    cols = [columns[j] for j in keep]
    c = c_all[keep]
    m, n = len(items), len(cols)
    matrix = np.zeros((m, n))
    int_cols: list[dict[str, int]] = []
    for j, col in enumerate(cols):
        for t, q in col.coeffs.items():
            matrix[index[t], j] = q
        int_cols.append({t: int(q) for t, q in col.coeffs.items()})
    b = np.array([rhs[t] for t in items], dtype=float)
    integral_costs = bool(np.all(np.abs(c - np.round(c)) < 1e-12))

    def covers_exactly(counts) -> bool:
        covered = dict.fromkeys(items, 0)
        for col_coeffs, k in zip(int_cols, counts):
            for t, q in col_coeffs.items():
                covered[t] += q * k
        return all(covered[t] == rhs[t] for t in items)

    best_counts = None
    best_obj = math.inf
    if incumbent_counts is not None:
        if len(incumbent_counts) != len(columns):
            raise ValueError("incumbent is not a feasible exact cover")
        seed = [0] * n
        for j, k in enumerate(incumbent_counts):
            seed[rep_index[j]] += int(k)
        if not covers_exactly(seed):
            raise ValueError("incumbent is not a feasible exact cover")
        best_counts = seed
        best_obj = float(c @ np.array(seed, dtype=float))

    def bound_beats_incumbent(bound: float) -> bool:
        if best_counts is None:
            return True
        if integral_costs:
            return math.ceil(bound - 1e-6) < best_obj - 1e-9
        return bound < best_obj - 1e-9

    # cheapest coverage first for the greedy completion pass
    greedy_order = sorted(
        range(n), key=lambda j: (c[j] / max(1, sum(int_cols[j].values())), j)
    )

    def round_and_complete(x) -> tuple[float, list[int]] | None:
        """Floor the node LP point, then finish the cover with whole columns
        if possible; node bounds don't apply, any cover is a global incumbent."""
        counts = [int(math.floor(v + 1e-9)) for v in x]
        residual = dict.fromkeys(items, 0)
        for t in items:
            residual[t] = rhs[t]
        for col_coeffs, k in zip(int_cols, counts):
            if not k:
                continue
            for t, q in col_coeffs.items():
                residual[t] -= q * k
        if any(v < 0 for v in residual.values()):
            return None
        for j in greedy_order:
            col_coeffs = int_cols[j]
            if not col_coeffs:
                continue
            k = min(residual[t] // q for t, q in col_coeffs.items())
            if k > 0:
                counts[j] += k
                for t, q in col_coeffs.items():
                    residual[t] -= q * k
        if any(residual.values()):
            return None
        return float(c @ np.array(counts, dtype=float)), counts

    root = (0.0, 0, 0, tuple([0] * n), tuple([None] * n))
    heap = [root]
    pushed = 1
    nodes = 0
    limited = False
    while heap:
        bound, neg_depth, _, lower, upper = heapq.heappop(heap)
        if not bound_beats_incumbent(bound):
            continue
        if nodes >= node_limit:
            limited = True
            break
        nodes += 1
        solved = _node_lp(c, matrix, b, lower, upper)
        if solved is None:
            continue
        x, objective = solved
        if not bound_beats_incumbent(objective):
            continue
        fractional = np.abs(x - np.round(x))
        j = int(np.argmax(fractional))
        if fractional[j] <= _INT_TOL:
            counts = [int(round(v)) for v in x]
            if covers_exactly(counts):
                value = float(c @ np.array(counts, dtype=float))
                if value < best_obj - 1e-9:
                    best_obj, best_counts = value, counts
                continue
            # rounding broke a row; force a branch on the largest residue
            j = int(np.argmax(np.where(fractional > 0, fractional, -1.0)))
            if fractional[j] <= 0:
                continue
        completed = round_and_complete(x)
        if completed is not None and completed[0] < best_obj - 1e-9:
            best_obj, best_counts = completed
        if not bound_beats_incumbent(objective):
            continue
        value = x[j]
        down = list(upper)
        down[j] = math.floor(value)
        up = list(lower)
        up[j] = math.ceil(value)
        for child_lower, child_upper in ((lower, tuple(down)), (tuple(up), upper)):
            lo = child_lower[j]
            hi = child_upper[j]
            if hi is not None and lo > hi:
                continue
            heapq.heappush(
                heap, (objective, neg_depth - 1, pushed, child_lower, child_upper)
            )
            pushed += 1

    if best_counts is None:
        status = STATUS_ITERATION_LIMIT if limited else STATUS_INFEASIBLE
        return _build_solution(cols, [0] * n, rhs, status)
    status = STATUS_ITERATION_LIMIT if limited else STATUS_OPTIMAL
    return _build_solution(cols, best_counts, rhs, status)


# ---------------------------------------------------------------------------
# Warm start and the generation loop.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _WarmStart:
    solution: Solution
    rmp_columns: list[Column]
    initial_ids: list[str]


def _warm_start(order: Order, matched_cols: Sequence[Column], config: ColGenConfig) -> _WarmStart:
    rng = random.Random(config.rng_seed)
    pool = sorted(matched_cols, key=lambda col: col.id)
    if len(pool) > config.warm_start_size:
        sample = sorted(rng.sample(pool, config.warm_start_size), key=lambda col: col.id)
    else:
        sample = pool
    # slack must dominate every column that could ever enter the RMP, not
    # just the warm sample, or late admissions could beat it on cost
    slacks = make_slack_columns(order, slack_cost(order, pool))
    rhs = order.demand
    cols = list(sample) + slacks
    ip = solve_ip(
        cols,
        rhs,
        [col.cost for col in cols],
        node_limit=config.node_limit,
    )
    if not config.heuristic_enabled:
        return _WarmStart(ip, cols, [col.id for col in sample])

    heur = pack_leftovers(
        ip.heuristic_slack, config.heuristic_capacity, id_prefix=f"heur:{order.id}"
    )
    plan_cols = list(sample) + heur
    plan_counts = [ip.column_counts.get(col.id, 0) for col in sample] + [1] * len(heur)
    solution = _build_solution(plan_cols, plan_counts, rhs, ip.status)
    return _WarmStart(
        solution,
        plan_cols + slacks,
        [col.id for col in sample] + [col.id for col in heur],
    )


def warm_start(
    order: Order,
    matched: Sequence[Spu],
    sample_size: int = 30,
    rng_seed: int = 0,
    *,
    heuristic_capacity: int = 60,
    heuristic_enabled: bool = True,
) -> Solution:
    """Initial exact plan: cover what a random sample of matched units can,
    hand the leftover to the heuristic packer (or leave it on slack)."""
    config = ColGenConfig(
        warm_start_size=sample_size,
        rng_seed=rng_seed,
        heuristic_capacity=heuristic_capacity,
        heuristic_enabled=heuristic_enabled,
    )
    config.validate()
    return _warm_start(order, [spu_to_column(s) for s in matched], config).solution


def _incumbent_counts(solution: Solution, columns: Sequence[Column]) -> list[int]:
    """Re-express a warm-start plan as counts over the RMP columns; whatever
    its heuristic columns did not absorb goes back to raw slack."""
    residual = dict(solution.heuristic_slack)
    for col_id, k in solution.heuristic_column_counts.items():
        col = solution.columns[col_id]
        for t, q in col.coeffs.items():
            residual[t] = residual.get(t, 0) - q * k
    counts = []
    for col in columns:
        if col.provenance == PROVENANCE_MATCHED:
            counts.append(solution.column_counts.get(col.id, 0))
        elif col.provenance == PROVENANCE_HEURISTIC:
            counts.append(solution.heuristic_column_counts.get(col.id, 0))
        else:
            item = next(iter(col.coeffs))
            counts.append(max(0, residual.get(item, 0)))
    return counts


def run_colgen_detailed(
    order: Order, matched: Sequence[Spu], config: ColGenConfig | None = None
) -> tuple[Solution, ColGenState]:
    config = config or ColGenConfig()
    config.validate()
    matched_cols = [spu_to_column(s) for s in matched]
    ws = _warm_start(order, matched_cols, config)

    in_rmp = list(ws.rmp_columns)
    in_ids = {col.id for col in in_rmp}
    state = ColGenState(
        order=order,
        candidates=[col for col in matched_cols if col.id not in in_ids],
        in_rmp=in_rmp,
        warm_solution=ws.solution,
        initial_ids=list(ws.initial_ids),
    )

    items = [line.item_type for line in order.lines]
    b = np.array([line.quantity for line in order.lines], dtype=float)
    index = {t: i for i, t in enumerate(items)}

    def as_vector(col: Column) -> np.ndarray:
        vec = np.zeros(len(items))
        for t, q in col.coeffs.items():
            vec[index[t]] = q
        return vec

    vectors = [as_vector(col) for col in in_rmp]
    costs = [col.cost for col in in_rmp]
    # slack columns sit at the tail of the RMP, one per row: identity basis
    basis = [len(in_rmp) - len(items) + r for r in range(len(items))]

    hit_limit = False
    while True:
        matrix = np.column_stack(vectors)
        status, _, dual_vec, lp_objective, basis = simplex_solve(
            np.array(costs), matrix, b, basis=basis
        )
        if status != "optimal":
            raise SimplexError(f"master LP came back {status}")
        duals = {t: float(dual_vec[i]) for t, i in index.items()}
        state.duals = duals
        if state.duals_iter0 is None:
            state.duals_iter0 = duals
        picked = _price_batch(state.candidates, duals, config.epsilon, config.admit_per_iter)
        if not picked:
            state.final_lp_objective = lp_objective
            break
        if state.iteration >= config.max_iters:
            state.final_lp_objective = lp_objective
            hit_limit = True
            break
        state.iteration += 1
        admitted_ids = set()
        for col, delta in picked:
            state.trace.append(
                TraceEntry(state.iteration, lp_objective, col.id, delta)
            )
            state.in_rmp.append(col)
            vectors.append(as_vector(col))
            costs.append(col.cost)
            admitted_ids.add(col.id)
        state.candidates = [c for c in state.candidates if c.id not in admitted_ids]

    incumbent = _incumbent_counts(ws.solution, state.in_rmp)
    solution = solve_ip(
        state.in_rmp,
        order.demand,
        costs,
        node_limit=config.node_limit,
        incumbent_counts=incumbent,
    )
    if hit_limit:
        solution = replace(solution, status=STATUS_ITERATION_LIMIT)
    return solution, state


def run_colgen(order: Order, matched: Sequence[Spu], config: ColGenConfig | None = None) -> Solution:
    """Warm start, generate columns until no candidate prices, solve the IP."""
    return run_colgen_detailed(order, matched, config)[0]


# ---------------------------------------------------------------------------
# One-shot solves: an external predictor replaces the pricing loop.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneShotSetup:
    """Warm start plus the iteration-0 duals, i.e. everything an external
    column predictor needs to pick admissions in a single step."""

    order: Order
    config: ColGenConfig
    warm_solution: Solution
    rmp_columns: list[Column]
    initial_ids: list[str]
    duals_iter0: dict[str, float]
    candidates: list[Column]


def prepare_one_shot(
    order: Order, matched: Sequence[Spu], config: ColGenConfig | None = None
) -> OneShotSetup:
    """Build the warm-start RMP and solve its LP once for the duals.

    The RMP is assembled exactly as the generation loop does it, so the
    duals here are bit-identical to the loop's iteration-0 duals and the
    features computed from them match emitted training data.
    """
    config = config or ColGenConfig()
    config.validate()
    matched_cols = [spu_to_column(s) for s in matched]
    ws = _warm_start(order, matched_cols, config)

    items = [line.item_type for line in order.lines]
    b = np.array([line.quantity for line in order.lines], dtype=float)
    index = {t: i for i, t in enumerate(items)}
    matrix = np.zeros((len(items), len(ws.rmp_columns)))
    for j, col in enumerate(ws.rmp_columns):
        for t, q in col.coeffs.items():
            matrix[index[t], j] = q
    costs = np.array([col.cost for col in ws.rmp_columns])
    basis = [len(ws.rmp_columns) - len(items) + r for r in range(len(items))]
    status, _, dual_vec, _, _ = simplex_solve(costs, matrix, b, basis=basis)
    if status != "optimal":
        raise SimplexError(f"master LP came back {status}")

    in_ids = {col.id for col in ws.rmp_columns}
    return OneShotSetup(
        order=order,
        config=config,
        warm_solution=ws.solution,
        rmp_columns=list(ws.rmp_columns),
        initial_ids=list(ws.initial_ids),
        duals_iter0={t: float(dual_vec[i]) for t, i in index.items()},
        candidates=[col for col in matched_cols if col.id not in in_ids],
    )


def solve_one_shot(setup: OneShotSetup, selected_ids: Iterable[str]) -> Solution:
    """Integer solve over the warm-start RMP plus the selected candidates;
    no pricing iterations.  Unknown ids are ignored."""
    chosen_ids = set(selected_ids)
    columns = setup.rmp_columns + [c for c in setup.candidates if c.id in chosen_ids]
    incumbent = _incumbent_counts(setup.warm_solution, columns)
    return solve_ip(
        columns,
        setup.order.demand,
        [col.cost for col in columns],
        node_limit=setup.config.node_limit,
        incumbent_counts=incumbent,
    )
