"""Dense two-phase revised simplex for the restricted master problems.

Problems here are small (tens of rows, a few hundred columns), so the basis
inverse is kept explicitly, updated by elementary row operations on each pivot
and refreshed from scratch periodically.  Duals come from the final basis:
y = c_B B^-1, recomputed with a fresh solve at termination so the reported
primal/dual objectives agree to machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPT_TOL = 1e-9       # optimality / dual feasibility tolerance
PIVOT_TOL = 1e-10    # smallest pivot element accepted
STEP_TOL = 1e-9      # ratio-test steps below this are degenerate, i.e. zero
_REFRESH_EVERY = 128
_MAX_PIVOTS = 200_000

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


class SimplexError(RuntimeError):
    """Numerical breakdown; not expected at this problem scale."""


@dataclass(frozen=True)
class LpProblem:
    """min costs @ x  s.t.  constraint_matrix @ x == rhs, x >= 0.

    Rows are item types of one order; columns are packing columns, so all
    matrix entries are nonnegative and every demand is positive.
    """

    costs: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float).reshape(-1)
        matrix = np.asarray(self.constraint_matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError(f"constraint matrix must be 2-D, got shape {matrix.shape}")
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if matrix.shape != (rhs.size, costs.size):
            raise ValueError(
                f"dimension mismatch: matrix {matrix.shape}, "
                f"{rhs.size} rhs rows, {costs.size} costs"
            )
        if rhs.size == 0 or costs.size == 0:
            raise ValueError("empty problem")
        if np.any(rhs <= 0):
            raise ValueError("all rhs entries must be positive")
        if np.any(matrix < 0):
            raise ValueError("matrix entries must be nonnegative")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "constraint_matrix", matrix)
        object.__setattr__(self, "rhs", rhs)


@dataclass(frozen=True)
class LpResult:
    primal: np.ndarray
    duals: np.ndarray
    objective: float
    status: str


def _refactor(matrix: np.ndarray, basis: list[int]) -> np.ndarray:
    try:
        return np.linalg.inv(matrix[:, basis])
    except np.linalg.LinAlgError as exc:
        raise SimplexError(f"singular basis {basis}") from exc


def _pivot_update(binv: np.ndarray, direction: np.ndarray, row: int) -> None:
    pivot_row = binv[row] / direction[row]
    binv -= np.outer(direction, pivot_row)
    binv[row] = pivot_row


def _simplex_core(costs, matrix, rhs, basis, binv):
    """Primal simplex iterations from a feasible basis.

    Dantzig pricing by default; Bland's rule kicks in after m consecutive
    degenerate pivots and stays on until the next real vertex move, which
    guarantees termination.  Stalls are detected by step length, not by
    objective decrease: with large cost coefficients a noise-level step of
    1e-14 times a reduced cost in the thousands looks like "progress" and
    would keep the anti-cycling rule switched off forever.  Basic values
    below STEP_TOL count as exactly zero in the ratio test for the same
    reason.  Returns (status, basis, binv) with status "optimal" or
    "unbounded".
    """
    m, n = matrix.shape
    stalled = 0
    bland = False
    for pivots in range(_MAX_PIVOTS):
        if bland or (pivots and pivots % _REFRESH_EVERY == 0):
            # drift in the incrementally-updated inverse is what turns exact
            # degenerate ties into fake improving steps, so refresh on every
            # pivot while escaping a degenerate vertex
            binv = _refactor(matrix, basis)
        xb = binv @ rhs
        y = costs[basis] @ binv
        reduced = costs - y @ matrix
        reduced[basis] = 0.0
        if bland:
            entering = -1
            for j in range(n):
                if reduced[j] < -OPT_TOL:
                    entering = j
                    break
        else:
            entering = int(np.argmin(reduced))
            if reduced[entering] >= -OPT_TOL:
                entering = -1
        if entering < 0:
            return STATUS_OPTIMAL, basis, binv

        direction = binv @ matrix[:, entering]
        leaving = -1
        best_theta = np.inf
        for i in range(m):
            if direction[i] > PIVOT_TOL:
                basic_value = xb[i] if xb[i] > STEP_TOL else 0.0
                theta = basic_value / direction[i]
                # tie-break on smallest basis index, as Bland requires
                if theta < best_theta - 1e-12 or (
                    theta < best_theta + 1e-12
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_theta = min(theta, best_theta)
                    leaving = i
        if leaving < 0:
            return STATUS_UNBOUNDED, basis, binv

        if best_theta > STEP_TOL:
            stalled = 0
            bland = False
        else:
            stalled += 1
            if stalled >= m:
                bland = True
        _pivot_update(binv, direction, leaving)
        basis[leaving] = entering
    raise SimplexError("pivot limit exceeded")


def _drive_out_artificials(matrix, basis, binv, n_real):
    """After phase 1, replace basic artificials by real columns where
    possible; rows that admit none are linearly dependent and get dropped.
    Returns (keep_rows, basis) over real columns only."""
    m = matrix.shape[0]
    basic = set(basis)
    redundant = []
    for r in range(m):
        if basis[r] < n_real:
            continue
        row_vec = binv[r] @ matrix[:, :n_real]
        entering = -1
        for j in range(n_real):
            if j not in basic and abs(row_vec[j]) > 1e-9:
                entering = j
                break
        if entering < 0:
            redundant.append(r)
            continue
        direction = binv @ matrix[:, entering]
        _pivot_update(binv, direction, r)
        basic.discard(basis[r])
        basic.add(entering)
        basis[r] = entering
    keep = [r for r in range(m) if r not in set(redundant)]
    return keep, basis


def simplex_solve(costs, matrix, rhs, basis: list[int] | None = None):
    """Two-phase revised simplex on min c x, A x = b, x >= 0.

    General-purpose core: b may have any sign (rows are flipped internally),
    matrix entries any sign.  If `basis` indexes a primal-feasible basis the
    first phase is skipped.  Returns (status, x, duals, objective, basis);
    on infeasible/unbounded the solution fields are zeros.
    """
    costs = np.asarray(costs, dtype=float).reshape(-1)
    matrix = np.asarray(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    m, n = matrix.shape
    failure = (np.zeros(n), np.zeros(m), 0.0)

    sign = np.where(rhs < 0, -1.0, 1.0)
    work_matrix = matrix * sign[:, None]
    work_rhs = rhs * sign

    binv = None
    if basis is not None:
        basis = list(basis)
        try:
            binv = _refactor(work_matrix, basis)
            if np.min(binv @ work_rhs) < -1e-7:
                binv = None  # stale basis, fall back to a cold start
        except SimplexError:
            binv = None

    keep = list(range(m))
    if binv is None:
        phase1 = np.hstack([work_matrix, np.eye(m)])
        phase1_costs = np.concatenate([np.zeros(n), np.ones(m)])
        basis = list(range(n, n + m))
        status, basis, binv = _simplex_core(
            phase1_costs, phase1, work_rhs, basis, np.eye(m)
        )
        if status != STATUS_OPTIMAL:
            raise SimplexError("phase 1 cannot be unbounded")
        infeas = float(phase1_costs[basis] @ (binv @ work_rhs))
        if infeas > 1e-7 * max(1.0, float(np.max(np.abs(work_rhs)))):
            return STATUS_INFEASIBLE, *failure, []
        keep, basis = _drive_out_artificials(phase1, basis, binv, n)
        work_matrix = work_matrix[keep]
        work_rhs = work_rhs[keep]
        basis = [basis[r] for r in range(m) if r in set(keep)]
        binv = _refactor(work_matrix, basis)

    status, basis, binv = _simplex_core(costs, work_matrix, work_rhs, basis, binv)
    if status == STATUS_UNBOUNDED:
        return STATUS_UNBOUNDED, *failure, basis

    # fresh solves for the reported numbers: keeps the duality gap at
    # machine precision instead of accumulated pivot drift
    basis_matrix = work_matrix[:, basis]
    xb = np.linalg.solve(basis_matrix, work_rhs)
    xb[np.abs(xb) < 1e-12] = 0.0
    y = np.linalg.solve(basis_matrix.T, costs[basis])

    x = np.zeros(n)
    x[basis] = xb
    duals = np.zeros(m)
    duals[keep] = y
    duals *= sign
    return STATUS_OPTIMAL, x, duals, float(costs @ x), basis


def solve_lp(problem: LpProblem) -> LpResult:
    """Solve one restricted master LP and report primal, duals and value."""
    status, x, duals, objective, _ = simplex_solve(
        problem.costs, problem.constraint_matrix, problem.rhs
    )
    return LpResult(primal=x, duals=duals, objective=objective, status=status)
