import numpy as np
import pytest
from scipy.optimize import linprog

from tissf.errors import DegenerateConstraintError, NonFiniteError
from tissf.lp_solver import LpProblem, LpStatus, solve_2d, solve_simplex


class TestSimplex:
    def test_box_corner(self):
        G = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
        sol = solve_simplex(LpProblem([-1.0, -1.0], G, [1.0, 2.0, 0.0, 0.0]))
        assert sol.status == LpStatus.OPTIMAL
        np.testing.assert_allclose(sol.x, [1.0, 2.0], atol=1e-12)
        assert sol.objective == pytest.approx(-3.0)
        assert set(sol.active_rows) == {0, 1}

    def test_negative_right_hand_side_needs_phase_one(self):
        # x >= 1, y >= 2, minimize x + y
        sol = solve_simplex(LpProblem([1.0, 1.0], [[-1.0, 0.0], [0.0, -1.0]], [-1.0, -2.0]))
        assert sol.is_optimal
        np.testing.assert_allclose(sol.x, [1.0, 2.0], atol=1e-12)

    def test_infeasible(self):
        sol = solve_simplex(LpProblem([1.0], [[1.0], [-1.0]], [-1.0, -1.0]))
        assert sol.status == LpStatus.INFEASIBLE
        assert sol.x is None

    def test_unbounded(self):
        sol = solve_simplex(LpProblem([-1.0], [[-1.0]], [0.0]))
        assert sol.status == LpStatus.UNBOUNDED

    def test_no_constraints(self):
        assert solve_simplex(LpProblem([0.0, 0.0], np.empty((0, 2)), [])).is_optimal
        assert solve_simplex(LpProblem([1.0, 0.0], np.empty((0, 2)), [])).status == LpStatus.UNBOUNDED

    def test_rejects_non_finite_data(self):
        with pytest.raises(NonFiniteError):
            LpProblem([1.0], [[float("inf")]], [1.0])

    def test_rejects_inconsistent_shapes(self):
        with pytest.raises(ValueError):
            LpProblem([1.0, 1.0], [[1.0]], [1.0])

    def test_matches_linprog_on_random_bounded_problems(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            p = int(rng.integers(2, 8))
            x_feasible = rng.uniform(-1.0, 1.0, n)
            G = np.vstack([rng.standard_normal((p, n)), np.eye(n), -np.eye(n)])
            g = np.concatenate([G[:p] @ x_feasible + rng.uniform(0.1, 1.0, p),
                                np.full(2 * n, 10.0)])
            c = rng.standard_normal(n)
            ours = solve_simplex(LpProblem(c, G, g))
            ref = linprog(c, A_ub=G, b_ub=g, bounds=[(None, None)] * n, method="highs")
            assert ours.is_optimal
            assert ours.objective == pytest.approx(ref.fun, abs=1e-7)
            assert np.all(G @ ours.x <= g + 1e-8)

    def test_is_deterministic(self):
        rng = np.random.default_rng(5)
        G = np.vstack([rng.standard_normal((6, 3)), np.eye(3), -np.eye(3)])
        g = np.concatenate([np.ones(6), np.full(6, 4.0)])
        problem = LpProblem(rng.standard_normal(3), G, g)
        first, second = solve_simplex(problem), solve_simplex(problem)
        assert np.array_equal(first.x, second.x)
        assert first.active_rows == second.active_rows


class TestTwoVariable:
    def test_vertex_solution(self):
        sol = solve_2d([(1.0, 0.0, 1.0), (0.0, 1.0, 2.0)], (1.0, 1.0))
        assert sol.is_optimal
        np.testing.assert_allclose(sol.x, [1.0, 2.0])
        assert sol.active_rows == (0, 1)

    def test_infeasible(self):
        sol = solve_2d([(1.0, 0.0, 1.0), (-1.0, 0.0, 0.0)], (1.0, 1.0))
        assert sol.status == LpStatus.INFEASIBLE

    def test_unbounded(self):
        sol = solve_2d([(1.0, 0.0, 0.0)], (1.0, 1.0))
        assert sol.status == LpStatus.UNBOUNDED

    def test_unbounded_along_a_boundary(self):
        # y1 + 2 y2 >= 1 and y2 >= 0.01; minimizing y1 alone runs off along y2
        sol = solve_2d([(1.0, 2.0, 1.0), (0.0, 1.0, 0.01)], (1.0, 0.0))
        assert sol.status == LpStatus.UNBOUNDED

    def test_zero_row_with_positive_rhs_is_rejected(self):
        with pytest.raises(DegenerateConstraintError):
            solve_2d([(0.0, 0.0, 1.0), (1.0, 0.0, 0.0)], (1.0, 0.0))

    def test_trivial_zero_row_is_ignored(self):
        sol = solve_2d([(0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)], (1.0, 1.0))
        assert sol.is_optimal
        np.testing.assert_allclose(sol.x, [0.0, 0.0])

    def test_tie_breaks_to_smallest_first_coordinate(self):
        # every point of the segment y1 + y2 = 1 with y1, y2 in [0, 1] is optimal
        rows = [(1.0, 1.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        sol = solve_2d(rows, (1.0, 1.0))
        np.testing.assert_allclose(sol.x, [0.0, 1.0], atol=1e-12)

    def test_empty_constraint_list(self):
        with pytest.raises(ValueError):
            solve_2d([], (1.0, 1.0))

    def test_matches_linprog_on_tuning_shaped_problems(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(5, 60))
            h = rng.uniform(-0.2, 5.0, k)
            eta = rng.uniform(-3.0, 1.0, k)
            rows = [(1.0, hi, ei) for hi, ei in zip(h, eta)] + [(0.0, 1.0, 0.01)]
            rho = float(rng.uniform(0.5, 3.0))
            ours = solve_2d(rows, (1.0, rho))
            A = -np.asarray(rows)[:, :2]
            b = -np.asarray(rows)[:, 2]
            ref = linprog([1.0, rho], A_ub=A, b_ub=b, bounds=[(None, None)] * 2, method="highs")
            if ref.status == 3:
                assert ours.status == LpStatus.UNBOUNDED
                continue
            assert ours.is_optimal
            assert ours.objective == pytest.approx(ref.fun, abs=1e-7)

    def test_agrees_with_simplex_on_bounded_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            y_feasible = rng.uniform(-2.0, 2.0, 2)
            k = int(rng.integers(1, 8))
            A = rng.standard_normal((k, 2))
            r = A @ y_feasible - rng.uniform(0.0, 1.0, k)
            box = np.vstack([np.eye(2), -np.eye(2)])
            A = np.vstack([A, box])
            r = np.concatenate([r, np.full(4, -5.0)])
            w = rng.standard_normal(2)
            exact = solve_2d([(a[0], a[1], ri) for a, ri in zip(A, r)], tuple(w))
            simplex = solve_simplex(LpProblem(w, -A, -r))
            assert exact.is_optimal and simplex.is_optimal
            assert exact.objective == pytest.approx(simplex.objective, abs=1e-8)
