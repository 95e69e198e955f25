"""Tests for the two-phase simplex core."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from packcover.lp import OPT_TOL, LpProblem, LpResult, simplex_solve, solve_lp

from oracles import lp_by_vertex_enumeration, random_rmp_instance


def assert_certificates(problem: LpProblem, result: LpResult, eps=OPT_TOL):
    """Strong duality, dual feasibility and complementary slackness."""
    assert result.status == "optimal"
    primal_obj = float(problem.costs @ result.primal)
    dual_obj = float(problem.rhs @ result.duals)
    assert abs(primal_obj - dual_obj) <= eps
    reduced = problem.costs - result.duals @ problem.constraint_matrix
    assert np.min(reduced) >= -eps
    for i, x in enumerate(result.primal):
        if x > eps:
            assert abs(reduced[i]) <= eps


def test_identity_unit_costs():
    problem = LpProblem(costs=[1.0, 1.0], constraint_matrix=np.eye(2), rhs=[3, 2])
    result = solve_lp(problem)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(5.0, abs=1e-12)
    assert result.primal == pytest.approx([3.0, 2.0])
    assert result.duals == pytest.approx([1.0, 1.0])
    assert_certificates(problem, result)


def test_single_row_picks_cheapest_cover():
    # min 3a + 1b s.t. 2a + 1b = 4 -> b=4, objective 4
    problem = LpProblem(costs=[3.0, 1.0], constraint_matrix=[[2, 1]], rhs=[4])
    result = solve_lp(problem)
    assert result.objective == pytest.approx(4.0, abs=1e-12)
    assert result.primal == pytest.approx([0.0, 4.0])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        LpProblem(costs=[1.0, 2.0], constraint_matrix=[[1.0]], rhs=[1.0])
    with pytest.raises(ValueError):
        LpProblem(costs=[1.0], constraint_matrix=[[1.0]], rhs=[1.0, 2.0])


def test_nonpositive_rhs_rejected():
    with pytest.raises(ValueError):
        LpProblem(costs=[1.0], constraint_matrix=[[1.0]], rhs=[0.0])


def test_infeasible_row_detected():
    # second row demands an item no column covers
    problem = LpProblem(costs=[1.0], constraint_matrix=[[1.0], [0.0]], rhs=[2, 1])
    assert solve_lp(problem).status == "infeasible"


def test_redundant_rows_get_zero_duals():
    # duplicated row: system is consistent but rank deficient
    problem = LpProblem(
        costs=[1.0, 2.0],
        constraint_matrix=[[1.0, 1.0], [1.0, 1.0], [0.0, 1.0]],
        rhs=[4, 4, 1],
    )
    result = solve_lp(problem)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(5.0, abs=1e-9)
    assert_certificates(problem, result)


def test_degenerate_instance_terminates():
    # classic degeneracy: rhs hits several bases at the same vertex
    matrix = np.array(
        [
            [1.0, 1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ]
    )
    problem = LpProblem(costs=[1.0, 1.0, 1.0, 1.0], constraint_matrix=matrix, rhs=[2, 2])
    result = solve_lp(problem)
    assert result.status == "optimal"
    assert_certificates(problem, result)


def test_matches_vertex_enumeration_oracle():
    """Frozen-seed sweep against exhaustive basic-solution enumeration."""
    rng = np.random.default_rng(20260815)
    for _ in range(120):
        costs, matrix, rhs = random_rmp_instance(rng, max_rows=5, max_cols=8)
        oracle_status, oracle_obj = lp_by_vertex_enumeration(costs, matrix, rhs)
        result = solve_lp(LpProblem(costs=costs, constraint_matrix=matrix, rhs=rhs))
        assert result.status == oracle_status
        if oracle_status == "optimal":
            assert result.objective == pytest.approx(oracle_obj, abs=1e-7)
            assert_certificates(
                LpProblem(costs=costs, constraint_matrix=matrix, rhs=rhs), result
            )


def test_duality_certificates_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(200):
        costs, matrix, rhs = random_rmp_instance(rng)
        problem = LpProblem(costs=costs, constraint_matrix=matrix, rhs=rhs)
        assert_certificates(problem, solve_lp(problem))


def test_adding_negative_reduced_cost_column_never_increases_objective():
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(200):
        costs, matrix, rhs = random_rmp_instance(rng)
        problem = LpProblem(costs=costs, constraint_matrix=matrix, rhs=rhs)
        result = solve_lp(problem)
        m = matrix.shape[0]
        new_col = np.zeros(m)
        support = rng.choice(m, size=rng.integers(1, m + 1), replace=False)
        new_col[support] = rng.integers(1, 6, size=len(support))
        # price the column; only negative reduced cost is interesting
        for cost in (0.25, 1.0, 5.0):
            if cost - float(result.duals @ new_col) < -OPT_TOL:
                grown = LpProblem(
                    costs=np.append(costs, cost),
                    constraint_matrix=np.column_stack([matrix, new_col]),
                    rhs=rhs,
                )
                regrown = solve_lp(grown)
                assert regrown.objective <= result.objective + OPT_TOL
                checked += 1
                break
    assert checked > 50


def test_warm_basis_matches_cold_solve():
    rng = np.random.default_rng(41)
    for _ in range(50):
        costs, matrix, rhs = random_rmp_instance(rng, max_rows=6, max_cols=10)
        status, x, duals, obj, basis = simplex_solve(costs, matrix, rhs)
        assert status == "optimal"
        # grow by one column and restart from the previous basis
        m = matrix.shape[0]
        new_col = np.zeros(m)
        new_col[rng.integers(0, m)] = 1.0
        grown = np.column_stack([matrix, new_col])
        grown_costs = np.append(costs, 0.5)
        warm = simplex_solve(grown_costs, grown, rhs, basis=list(basis))
        cold = simplex_solve(grown_costs, grown, rhs)
        assert warm[0] == cold[0] == "optimal"
        assert warm[3] == pytest.approx(cold[3], abs=1e-8)


def test_degenerate_vertex_with_large_costs_terminates():
    # Branch-and-bound node captured from a merged-order run: a degenerate
    # vertex where noise-level steps times cost coefficients in the
    # thousands used to look like objective progress, so the anti-cycling
    # rule never engaged and the pivot limit blew.  Must solve in
    # milliseconds with clean certificates.
    fixture = np.load(Path(__file__).parent / "data" / "degenerate_rmp.npz")
    costs, matrix, rhs = fixture["costs"], fixture["matrix"], fixture["rhs"]
    status, x, duals, objective, _ = simplex_solve(costs, matrix, rhs)
    assert status == "optimal"
    assert np.allclose(matrix @ x, rhs, atol=1e-7)
    assert np.min(x) >= -1e-9
    reduced = costs - duals @ matrix
    assert np.min(reduced) >= -1e-6
    assert abs(objective - float(duals @ rhs)) <= 1e-6
