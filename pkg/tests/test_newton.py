"""Newton driver, linear solver, and finite-difference checker."""

import numpy as np
import pytest

from ddcm.newton import (
    DimensionMismatch,
    Diverged,
    KktProblem,
    LinearSolveSingular,
    NewtonSettings,
    jacobian_check,
    newton_solve,
    solve_kkt_linear,
)

# root of (q^3 - q)/2 = 20, frozen from numpy.roots([1, 0, -1, -40])
CUBIC_ROOT = 3.5173935140528187


def linear_problem(A, b):
    A = np.asarray(A, dtype=float)
    return KktProblem(A.shape[0], lambda x: A @ x - b, lambda x: A, "linear")


def cubic_problem():
    return KktProblem(
        1,
        lambda x: np.array([0.5 * (x[0] ** 3 - x[0]) - 20.0]),
        lambda x: np.array([[1.5 * x[0] ** 2 - 0.5]]),
        "free-end equilibrium",
    )


class TestSolveKktLinear:
    def test_identity(self):
        assert np.allclose(solve_kkt_linear(np.eye(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])

    def test_permutation_indefinite(self):
        S = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(solve_kkt_linear(S, np.array([4.0, -7.0])), [-7.0, 4.0])

    def test_random_symmetric_indefinite(self):
        # construct S = Q D Q^T with mixed-sign spectrum; the oracle is x itself
        rng = np.random.default_rng(7)
        q, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        d = rng.uniform(0.5, 3.0, 20) * np.where(np.arange(20) % 2 == 0, 1.0, -1.0)
        S = q @ np.diag(d) @ q.T
        x = rng.standard_normal(20)
        assert np.linalg.norm(solve_kkt_linear(S, S @ x) - x) < 1e-8

    def test_residual_bound(self):
        rng = np.random.default_rng(8)
        S = rng.standard_normal((30, 30))
        S = S + S.T
        rhs = rng.standard_normal(30)
        dx = solve_kkt_linear(S, rhs)
        assert np.linalg.norm(S @ dx - rhs) <= 1e-10 * (1.0 + np.linalg.norm(rhs))

    def test_singular_raises(self):
        S = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(LinearSolveSingular):
            solve_kkt_linear(S, np.array([1.0, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_kkt_linear(np.eye(2), np.ones(3))


class TestNewtonSolve:
    def test_linear_one_iteration(self):
        problem = linear_problem(np.eye(2), np.zeros(2))
        res = newton_solve(problem, np.array([1.0, 1.0]))
        assert res.converged and res.iterations == 1
        assert np.allclose(res.x_star, 0.0)

    def test_cubic_equilibrium_root(self):
        res = newton_solve(cubic_problem(), np.array([3.0]), NewtonSettings(rel_tol=1e-12))
        assert res.converged
        assert res.x_star[0] == pytest.approx(CUBIC_ROOT, abs=1e-10)
        assert res.x_star[0] == pytest.approx(3.51739351, abs=1e-6)

    def test_superlinear_step_ratios(self):
        # delta_{k+1} / delta_k should drop below 1e-2 over the last iterations
        res = newton_solve(cubic_problem(), np.array([3.0]), NewtonSettings(rel_tol=1e-14))
        steps = [s for s in res.step_norms if s > 0]
        ratios = [b / a for a, b in zip(steps, steps[1:])]
        assert ratios[-1] < 1e-2
        assert ratios[-1] < ratios[0]

    def test_budget_exhaustion_flagged(self):
        res = newton_solve(cubic_problem(), np.array([100.0]), NewtonSettings(max_iterations=3))
        assert not res.converged and res.iterations == 3

    def test_divergence_raises(self):
        problem = KktProblem(1, lambda x: np.array([1.0]), lambda x: np.array([[1e-300]]))
        with pytest.raises(Diverged):
            newton_solve(problem, np.array([0.0]))

    def test_nonfinite_residual_raises(self):
        problem = KktProblem(1, lambda x: np.array([np.nan]), lambda x: np.eye(1))
        with pytest.raises(Diverged):
            newton_solve(problem, np.array([0.0]))

    def test_deterministic_traces(self):
        runs = [
            newton_solve(cubic_problem(), np.array([3.0]), NewtonSettings(record_trace=True))
            for _ in range(2)
        ]
        assert runs[0].step_norms == runs[1].step_norms
        assert runs[0].residual_norms == runs[1].residual_norms
        assert runs[0].x_star.tobytes() == runs[1].x_star.tobytes()

    def test_start_at_root_takes_no_step(self):
        res = newton_solve(linear_problem(np.eye(2), np.zeros(2)), np.zeros(2))
        assert res.converged and res.iterations == 0

    def test_x0_dimension_checked(self):
        with pytest.raises(DimensionMismatch):
            newton_solve(cubic_problem(), np.zeros(2))

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            NewtonSettings(rel_tol=0.0)
        with pytest.raises(ValueError):
            NewtonSettings(max_iterations=0)


class TestJacobianCheck:
    def test_linear_exact(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((5, 5))
        problem = linear_problem(A, rng.standard_normal(5))
        assert jacobian_check(problem, rng.standard_normal(5)) < 1e-9

    def test_detects_wrong_matrix(self):
        A = np.eye(3)
        problem = KktProblem(3, lambda x: A @ x, lambda x: 2.0 * A)
        assert jacobian_check(problem, np.ones(3)) > 0.1

    def test_cubic(self):
        assert jacobian_check(cubic_problem(), np.array([1.7])) < 1e-8
