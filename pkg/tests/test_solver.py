import math

import numpy as np
import pytest

from bdrsplit.core import IterateState, SolverParams, SplittingProblem, TerminatedBy, objective_value
from bdrsplit.exc import BdrDimensionError, BdrDivergenceError, BdrDomainError, BdrParameterError
from bdrsplit.generators import make_case_instance
from bdrsplit.problem import CsProblem
from bdrsplit.prox import soft_threshold
from bdrsplit.solver import (
    baseline_pdca_solve,
    bdr_solve,
    bdr_step,
    compute_delta,
    compute_gamma_bar,
    heuristic_gamma_update,
    lyapunov_eval,
    stationarity_gap,
)

from .conftest import TINY_B, TINY_LAMBDA
from .oracles import GridSpec, cs_objective, grid_minimize


class TestStepSizeTheory:
    def test_gamma_bar__reference_value(self):
        assert compute_gamma_bar(1.4, 0.0, 1.0) == pytest.approx(0.5477, abs=5e-4)

    def test_gamma_bar__nu_one(self):
        assert compute_gamma_bar(1.0, 0.0, 1.0) == pytest.approx(math.sqrt(8) / 4)

    @pytest.mark.parametrize("nu,rho", [(0.5, 0.0), (1.4, 2.0)])
    def test_gamma_bar__unbounded_without_ell(self, nu, rho):
        assert math.isinf(compute_gamma_bar(nu, rho, 0.0))

    @pytest.mark.parametrize("nu", [0.0, 2.0, -1.0, 2.5])
    def test_gamma_bar__nu_out_of_range(self, nu):
        with pytest.raises(BdrParameterError):
            compute_gamma_bar(nu, 0.0, 1.0)

    def test_delta__reference_value(self):
        assert compute_delta(1.4, 0.0, 1.0, 0.447) == pytest.approx(0.3202, abs=1e-4)

    def test_delta__vanishes_at_gamma_bar(self):
        gamma_bar = compute_gamma_bar(1.4, 0.0, 1.0)
        assert compute_delta(1.4, 0.0, 1.0, gamma_bar) == pytest.approx(0.0, abs=1e-12)

    def test_delta__positive_below_gamma_bar(self, rng):
        for _ in range(100):
            nu, rho, ell = rng.uniform(0.05, 1.95), rng.uniform(0, 5), rng.uniform(0.1, 5)
            gamma_bar = compute_gamma_bar(nu, rho, ell)
            assert compute_delta(nu, rho, ell, gamma_bar / 2) > 0
            assert compute_delta(nu, rho, ell, gamma_bar * 1.01) < 0

    def test_delta__nonpositive_gamma(self):
        with pytest.raises(BdrParameterError):
            compute_delta(1.4, 0.0, 1.0, 0.0)


class TestLyapunov:
    def test_lyapunov__vanishes_when_data_terms_vanish(self):
        problem = CsProblem(np.zeros((2, 2)), np.zeros(2), 0.0, g_weight=0.3)
        v = np.array([1.0, 2.0])
        state = IterateState(v, v.copy(), v.copy(), np.zeros(2))

        assert lyapunov_eval(state, problem, SolverParams(gamma=0.5)) == 0.0

    def test_lyapunov__term_by_term(self, rng):
        A = rng.standard_normal((4, 6))
        b = rng.standard_normal(4)
        lam = 0.2
        problem = CsProblem(A, b, lam)
        x, y, z = rng.standard_normal((3, 6))
        w = rng.standard_normal(6)
        w *= 0.15 / np.linalg.norm(w)
        params = SolverParams(gamma=0.3, nu=1.2)

        expected = (0.5 * np.sum((A @ x - b) ** 2) + lam * np.sum(np.abs(z)) + 0.0 - w @ z
                    + np.sum((x - y) ** 2) / 0.6 - np.sum((y - z) ** 2) / 0.6
                    + (1 - 1.2) / 0.3 * np.sum((x - z) ** 2))
        actual = lyapunov_eval(IterateState(x, y, z, w), problem, params)
        assert actual == pytest.approx(expected, rel=1e-12)

    def test_lyapunov__dual_outside_domain(self, tiny_cs2):
        state = IterateState(np.zeros(2), np.zeros(2), np.zeros(2), np.array([0.6, 0.0]))
        with pytest.raises(BdrDomainError):
            lyapunov_eval(state, tiny_cs2, SolverParams(gamma=0.5))


def _manual_step(problem: CsProblem, state: IterateState, gamma: float, tau: float, nu: float) -> IterateState:
    """The four updates written out with the closed forms for A = I"""
    b, lam = problem.b, problem.lam
    x = (state.y + gamma * b) / (1 + gamma)
    v = tau * state.w + state.z
    norm = np.linalg.norm(v)
    w = np.zeros_like(v) if norm == 0 else min(problem.g_weight / norm, 1 / tau) * v
    z = soft_threshold(2 * x - state.y + gamma * w, gamma * lam)
    return IterateState(x, state.y + nu * (z - x), z, w, state.n + 1)


class TestBdrStep:
    def test_bdr_step__composition_of_closed_forms(self, tiny_cs2):
        params = SolverParams(gamma=0.5, tau=20.0, nu=1.4, ell=1.0)
        state = IterateState.origin(2)
        for _ in range(5):
            expected = _manual_step(tiny_cs2, state, 0.5, 20.0, 1.4)
            state = bdr_step(state, tiny_cs2, params)
            for name in ("x", "y", "z", "w"):
                np.testing.assert_allclose(getattr(state, name), getattr(expected, name), atol=1e-12)
        assert state.n == 5

    def test_bdr_step__douglas_rachford_without_g(self, tiny_lasso):
        gamma, lam, b = 0.5, TINY_LAMBDA, np.array(TINY_B)
        params = SolverParams(gamma=gamma, nu=1.0, ell=1.0)
        state = IterateState.origin(2)
        y = np.zeros(2)
        for _ in range(10):
            x = (y + gamma * b) / (1 + gamma)
            z = soft_threshold(2 * x - y, gamma * lam)
            y = y + z - x
            state = bdr_step(state, tiny_lasso, params)
            np.testing.assert_allclose(state.y, y, atol=1e-12)
            np.testing.assert_allclose(state.z, z, atol=1e-12)
            np.testing.assert_array_equal(state.w, np.zeros(2))

    def test_bdr_step__stationary_seed_is_fixed_point(self, tiny_lasso):
        gamma = 0.5
        x_star = np.array([0.5, 0.0])
        seed = IterateState(x_star, x_star + gamma * tiny_lasso.grad_f(x_star), x_star.copy(), np.zeros(2))

        nxt = bdr_step(seed, tiny_lasso, SolverParams(gamma=gamma, ell=1.0))

        for name in ("x", "y", "z", "w"):
            np.testing.assert_allclose(getattr(nxt, name), getattr(seed, name), atol=1e-12)

    def test_bdr_step__gradient_relation(self, small_problem):
        params = SolverParams.for_problem(small_problem)
        state = IterateState.origin(small_problem.dim)
        for _ in range(30):
            nxt = bdr_step(state, small_problem, params)
            residual = np.linalg.norm(state.y - nxt.x - params.gamma * small_problem.grad_f(nxt.x))
            assert residual <= 1e-8 * (1 + np.linalg.norm(state.y))
            state = nxt

    def test_bdr_step__wrong_length(self, tiny_cs2):
        with pytest.raises(BdrDimensionError):
            bdr_step(IterateState.origin(3), tiny_cs2, SolverParams(gamma=0.5))


class TestBdrSolve:
    def test_bdr_solve__tiny_lasso(self, tiny_lasso):
        result = bdr_solve(tiny_lasso, SolverParams.for_problem(tiny_lasso))

        assert result.terminated_by == TerminatedBy.TOLERANCE
        np.testing.assert_allclose(result.solution, soft_threshold(np.array(TINY_B), TINY_LAMBDA), atol=1e-5)

    def test_bdr_solve__tiny_cs2_matches_grid(self, tiny_cs2):
        result = bdr_solve(tiny_cs2, SolverParams.for_problem(tiny_cs2, tol=1e-10, max_iter=10000))
        objective = cs_objective(tiny_cs2.A, tiny_cs2.b, TINY_LAMBDA, TINY_LAMBDA)
        point, value = grid_minimize(objective, GridSpec.box(2, 2.0, resolution=1e-3))

        np.testing.assert_allclose(result.solution, point, atol=1e-3)
        assert result.objective <= value + 1e-6
        assert value <= result.objective + 1e-6
        assert result.objective == pytest.approx(0.02, abs=1e-8)

    @pytest.mark.parametrize("seed", range(20))
    def test_bdr_solve__seeded_cs2_matches_grid(self, seed):
        """
        A = Q diag(a), b = Q (a * c) with Q orthogonal, a in [1, 2], |c| in [0.5, 2], lam = 0.1.

        Then f = 1/2 sum a_i^2 (x_i - c_i)^2: no axis point or origin is critical and the
        objective is strongly convex on the orthant of c, so the only critical point is the
        global minimizer.
        """
        rng = np.random.default_rng(seed)
        Q = np.linalg.qr(rng.standard_normal((2, 2)))[0]
        a = rng.uniform(1.0, 2.0, 2)
        c = rng.choice([-1.0, 1.0], 2) * rng.uniform(0.5, 2.0, 2)
        problem = CsProblem(Q * a, Q @ (a * c), 0.1)

        result = bdr_solve(problem, SolverParams.for_problem(problem, tol=1e-10, max_iter=10000))
        point, value = grid_minimize(cs_objective(problem.A, problem.b, 0.1, 0.1),
                                     GridSpec.box(2, 2.5, resolution=5e-3))

        assert result.objective <= value + 1e-4
        np.testing.assert_allclose(result.solution, point, atol=1e-3)

    def test_bdr_solve__tolerance_means_last_change_below_tol(self, small_problem):
        params = SolverParams.for_problem(small_problem)
        result = bdr_solve(small_problem, params)

        assert result.terminated_by == TerminatedBy.TOLERANCE
        assert result.trace.column("rel_change")[-1] < params.tol
        assert result.iterations == len(result.trace)
        assert result.state.is_finite

    def test_bdr_solve__max_iter(self, small_problem):
        params = SolverParams.for_problem(small_problem, tol=1e-15, max_iter=3)
        result = bdr_solve(small_problem, params)

        assert result.terminated_by == TerminatedBy.MAX_ITER
        assert result.iterations == 3
        np.testing.assert_array_equal(result.trace.column("n"), [1, 2, 3])

    def test_bdr_solve__lyapunov_off_by_default(self, small_problem):
        result = bdr_solve(small_problem, SolverParams.for_problem(small_problem, max_iter=5))
        assert np.all(np.isnan(result.trace.lyapunov))

    def test_bdr_solve__gamma_above_bound(self, tiny_lasso):
        with pytest.raises(BdrParameterError):
            bdr_solve(tiny_lasso, SolverParams(gamma=0.6, ell=1.0))

    def test_bdr_solve__diverging_iterates(self, tiny_lasso):
        class Exploding(CsProblem):
            def prox_f(self, y, gamma):
                return 1e13 * np.ones_like(y)

        problem = Exploding(np.eye(2), TINY_B, TINY_LAMBDA, g_weight=0.0)
        with pytest.raises(BdrDivergenceError) as e:
            bdr_solve(problem, SolverParams(gamma=0.5, ell=1.0))
        assert e.value.iterations == 1

    def test_bdr_solve__step_norms_vanish(self):
        for seed in range(5):
            problem = make_case_instance(1, seed=seed, scale=0.1).to_problem()
            params = SolverParams.for_problem(problem)
            result = bdr_solve(problem, params)

            assert result.terminated_by == TerminatedBy.TOLERANCE
            assert result.trace.column("dx")[-1] < 1e-4
            assert result.trace.column("dz")[-1] < 1e-4
            assert params.tau * result.trace.column("dw")[-1] < 1e-4

    def test_bdr_solve__lyapunov_descent(self):
        """Sufficient decrease along 100 seeded runs with gamma = gamma_bar - 1e-10."""
        for seed in range(100):
            problem = make_case_instance(1, seed=seed, scale=0.1).to_problem()
            params = SolverParams.for_problem(problem, track_lyapunov=True)
            trace = bdr_solve(problem, params).trace
            lyap, dx, dw = trace.lyapunov, trace.column("dx"), trace.column("dw")
            delta = params.delta

            lhs = lyap[1:] + delta / 2 * dx[1:] ** 2 + params.tau / 2 * dw[1:] ** 2
            rhs = lyap[:-1] + 1e-9 * (1 + np.abs(lyap[:-1]))
            assert np.all(lhs <= rhs), f"descent violated for seed {seed}"

    def test_bdr_solve__heuristic_gamma_schedule(self, small_problem):
        params = SolverParams.for_problem(small_problem, adapt_gamma=True, gamma0=0.05, k_factor=10.0)
        result = bdr_solve(small_problem, params)

        gammas = result.trace.gamma_used
        assert gammas[0] == pytest.approx(0.5)
        assert np.all(np.diff(gammas) <= 0)
        assert gammas[-1] >= 0.9999 * 0.05


class TestHeuristicGamma:
    def test_heuristic__trigger_halves(self):
        x_next = np.array([2000.0, 0.0])
        assert heuristic_gamma_update(4.47, 0.447, 1, np.zeros(2), x_next) == pytest.approx(2.235)

    def test_heuristic__floor_at_gamma0(self):
        x_next = np.array([2000.0, 0.0])
        assert heuristic_gamma_update(0.5, 0.447, 1, np.zeros(2), x_next) == pytest.approx(0.9999 * 0.447)

    def test_heuristic__large_iterate_triggers(self):
        x_prev = np.array([2e10, 0.0])
        assert heuristic_gamma_update(4.47, 0.447, 50, x_prev, x_prev) == pytest.approx(2.235)

    def test_heuristic__below_gamma0_unchanged(self):
        assert heuristic_gamma_update(0.4, 0.447, 1, np.zeros(2), np.array([5000.0, 0.0])) == 0.4

    def test_heuristic__no_trigger_unchanged(self):
        assert heuristic_gamma_update(4.47, 0.447, 10, np.zeros(2), np.ones(2)) == 4.47

    def test_heuristic__bad_counter(self):
        with pytest.raises(BdrParameterError):
            heuristic_gamma_update(4.47, 0.447, 0, np.zeros(2), np.ones(2))


class TestStationarityGap:
    def test_stationarity_gap__coincident(self):
        v = np.array([1.0, -1.0])
        state = IterateState(v, np.zeros(2), v.copy(), np.zeros(2))
        assert stationarity_gap(state, SolverParams(gamma=0.3)) == 0.0

    def test_stationarity_gap__one_step_identity(self, rng):
        problem = CsProblem(rng.standard_normal((5, 7)), rng.standard_normal(5), 0.2)
        params = SolverParams.for_problem(problem)
        x, y, z = rng.standard_normal((3, 7))
        w = rng.standard_normal(7)
        w *= 0.1 / np.linalg.norm(w)
        state = IterateState(x, y, z, w)

        nxt = bdr_step(state, problem, params)

        expected = np.linalg.norm(nxt.y - state.y) / (params.nu * params.gamma)
        assert stationarity_gap(nxt, params) == pytest.approx(expected, rel=1e-9)

    def test_stationarity_gap__converged_lasso(self, tiny_lasso):
        result = bdr_solve(tiny_lasso, SolverParams.for_problem(tiny_lasso, tol=1e-8))
        assert result.stationarity_gap <= 1e-5


class TestBaselinePdca:
    def test_pdca__tiny_lasso(self, tiny_lasso):
        result = baseline_pdca_solve(tiny_lasso, tol=1e-10)
        np.testing.assert_allclose(result.solution, [0.5, 0.0], atol=1e-8)
        assert result.terminated_by == TerminatedBy.TOLERANCE

    def test_pdca__tiny_cs2_matches_bdr(self, tiny_cs2):
        bdr = bdr_solve(tiny_cs2, SolverParams.for_problem(tiny_cs2, tol=1e-10, max_iter=10000))
        pdca = baseline_pdca_solve(tiny_cs2, tol=1e-10)
        assert pdca.objective == pytest.approx(bdr.objective, rel=1e-4)

    def test_pdca__extrapolation_reaches_same_objective(self, tiny_lasso):
        plain = baseline_pdca_solve(tiny_lasso, tol=1e-12)
        fast = baseline_pdca_solve(tiny_lasso, tol=1e-12, extrapolate=True)
        assert fast.objective == pytest.approx(plain.objective, abs=1e-6)

    def test_pdca__needs_subgradient_hook(self):
        class NoSubgradient(CsProblem):
            def subgrad_g(self, x):
                return SplittingProblem.subgrad_g(self, x)

        problem = NoSubgradient(np.eye(2), TINY_B, TINY_LAMBDA)
        assert bdr_solve(problem, SolverParams.for_problem(problem)).terminated_by == TerminatedBy.TOLERANCE
        with pytest.raises(NotImplementedError):
            baseline_pdca_solve(problem)

    def test_pdca__requires_positive_ell(self, tiny_lasso):
        with pytest.raises(BdrParameterError):
            baseline_pdca_solve(tiny_lasso, ell=0.0)

    def test_pdca__objective_column_nonincreasing_without_momentum(self, small_problem):
        trace = baseline_pdca_solve(small_problem, max_iter=200).trace
        objective = trace.objective_at_z
        assert np.all(np.diff(objective) <= 1e-12 * (1 + np.abs(objective[:-1])))

    def test_pdca__parity_with_bdr(self):
        """Both solvers land on the same objective value on scaled Gaussian cases."""
        for seed in range(10):
            problem = make_case_instance(1, seed=seed, scale=0.1).to_problem()
            params = SolverParams.for_problem(problem, tol=1e-9, max_iter=20000)
            bdr = bdr_solve(problem, params)
            pdca = baseline_pdca_solve(problem, tol=1e-9, max_iter=50000, extrapolate=True)
            assert pdca.objective == pytest.approx(bdr.objective, rel=1e-3), f"seed {seed}"
            assert objective_value(problem, bdr.solution) == pytest.approx(bdr.objective)
