import math

import numpy as np
import pytest

from bdrsplit.core import (
    TRACE_COLUMNS,
    BenchReport,
    ConvergenceTrace,
    IterateState,
    SolverParams,
    SplittingProblem,
    TerminatedBy,
    as_matrix,
    as_vector,
    objective_value,
    relative_change,
)
from bdrsplit.exc import BdrDimensionError, BdrParameterError
from bdrsplit.problem import CsProblem
from bdrsplit.prox import w_update

from .oracles import finite_diff_gradient


class TestValidation:
    def test_as_vector__rejects_nan(self):
        with pytest.raises(BdrParameterError):
            as_vector([1.0, math.nan])

    def test_as_vector__rejects_matrix(self):
        with pytest.raises(BdrDimensionError):
            as_vector(np.zeros((2, 2)))

    def test_as_matrix__rejects_inf(self):
        with pytest.raises(BdrParameterError):
            as_matrix([[1.0, math.inf]])

    def test_as_vector__coerces_ints(self):
        v = as_vector([1, 2, 3])
        assert v.dtype == np.float64


class TestRelativeChange:
    def test_relative_change__identical(self):
        assert relative_change(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_relative_change__small_step(self):
        assert relative_change(np.array([1.1, 2.0]), np.array([1.0, 2.0])) == pytest.approx(0.1 / math.sqrt(5))

    def test_relative_change__from_origin_is_finite(self):
        value = relative_change(np.array([1.0, 0.0]), np.zeros(2))
        assert math.isfinite(value)
        assert value > 1e200

    def test_relative_change__length_mismatch(self):
        with pytest.raises(BdrDimensionError):
            relative_change(np.zeros(2), np.zeros(3))


class TestObjectiveValue:
    def test_objective_value__all_zero(self):
        problem = CsProblem(np.zeros((2, 2)), np.zeros(2), 0.0)
        assert objective_value(problem, np.array([1.0, -1.0])) == 0.0

    def test_objective_value__origin(self, small_problem):
        b = small_problem.b
        assert objective_value(small_problem, np.zeros(small_problem.dim)) == pytest.approx(0.5 * float(b @ b))

    def test_objective_value__independent_recompute(self, rng):
        A = rng.standard_normal((6, 9))
        b = rng.standard_normal(6)
        x = rng.standard_normal(9)
        problem = CsProblem(A, b, 0.3)

        expected = 0.5 * np.sum((A @ x - b) ** 2) + 0.3 * np.sum(np.abs(x)) - 0.3 * np.sqrt(np.sum(x ** 2))
        assert objective_value(problem, x) == pytest.approx(expected, rel=1e-12)


class TestSplittingProblem:
    def test_grad_f__matches_finite_differences(self, small_problem, rng):
        for _ in range(20):
            x = rng.standard_normal(small_problem.dim)
            expected = finite_diff_gradient(small_problem.eval_f, x)
            np.testing.assert_allclose(small_problem.grad_f(x), expected, rtol=1e-5, atol=1e-7)

    def test_prox_f__subproblem_stationarity(self, small_problem, rng):
        gamma = 0.4
        for _ in range(5):
            y = rng.standard_normal(small_problem.dim)
            x = small_problem.prox_f(y, gamma)
            residual = np.linalg.norm(small_problem.grad_f(x) + (x - y) / gamma)
            assert residual <= 1e-8 * (1 + np.linalg.norm(y))

    def test_dual_update__moreau_fallback_matches_closed_form(self, tiny_cs2, rng):
        w = rng.uniform(-0.2, 0.2, 2)
        z = rng.standard_normal(2)
        generic = SplittingProblem.dual_update(tiny_cs2, w, z, 3.0)
        np.testing.assert_allclose(generic, w_update(w, z, 3.0, 0.5), atol=1e-12)

    def test_dual_update__nonpositive_tau(self, tiny_cs2):
        with pytest.raises(BdrParameterError):
            SplittingProblem.dual_update(tiny_cs2, np.zeros(2), np.ones(2), 0.0)

    def test_lipschitz_bounds_weak_convexity(self, small_problem):
        assert small_problem.lipschitz_ell >= small_problem.weak_convexity_rho >= 0.0


class TestSolverParams:
    def test_solver_params__defaults(self):
        params = SolverParams(gamma=0.5)
        assert (params.tau, params.nu, params.tol, params.max_iter) == (20.0, 1.4, 1e-6, 3000)
        assert params.rho == 0.0
        assert params.theory_mode

    @pytest.mark.parametrize("kwargs", [
        {"gamma": 0.0},
        {"gamma": 0.5, "nu": 2.0},
        {"gamma": 0.5, "nu": 0.0},
        {"gamma": 0.5, "tau": 0.0},
        {"gamma": 0.5, "tol": 0.0},
        {"gamma": 0.5, "max_iter": 0},
        {"gamma": 0.5, "ell": -1.0},
    ])
    def test_solver_params__invalid(self, kwargs):
        with pytest.raises(BdrParameterError):
            SolverParams(**kwargs)

    def test_for_problem__theory_mode(self, tiny_lasso):
        params = SolverParams.for_problem(tiny_lasso)

        assert params.ell == pytest.approx(1.0)
        assert params.gamma == pytest.approx(params.gamma_bar - 1e-10, abs=1e-15)
        assert params.delta > 0

    def test_for_problem__heuristic_mode(self, tiny_lasso):
        params = SolverParams.for_problem(tiny_lasso, adapt_gamma=True)

        assert params.gamma == pytest.approx(4.47)
        assert not params.theory_mode

    def test_for_problem__unbounded_gamma_bar(self):
        problem = CsProblem(np.zeros((2, 3)), np.zeros(2), 0.1)

        params = SolverParams.for_problem(problem)

        assert math.isinf(params.gamma_bar)
        assert params.gamma == 1.0


class TestIterateState:
    def test_iterate_state__origin(self):
        state = IterateState.origin(4)
        assert state.n == 0
        assert state.is_finite
        assert state.max_norm == 0.0

    def test_iterate_state__length_mismatch(self):
        with pytest.raises(BdrDimensionError):
            IterateState(np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(2))

    def test_iterate_state__detects_nan(self):
        state = IterateState(np.zeros(2), np.array([math.nan, 0.0]), np.zeros(2), np.zeros(2))
        assert not state.is_finite


class TestConvergenceTrace:
    def test_trace__frame_columns(self):
        trace = ConvergenceTrace()
        trace.append(1, 2.0, 1.5, 0.1, 0.2, 0.0, 0.5, 0.3)
        trace.append(2, 1.9, 1.4, 0.05, 0.1, 0.0, 0.2, 0.3)

        frame = trace.to_frame()

        assert list(frame.columns) == TRACE_COLUMNS
        assert len(trace) == 2
        assert frame["n"].dtype == np.int64
        np.testing.assert_array_equal(trace.lyapunov, [2.0, 1.9])
        np.testing.assert_array_equal(trace.gamma_used, [0.3, 0.3])

    def test_trace__empty(self):
        assert len(ConvergenceTrace().to_frame()) == 0


class TestBenchReport:
    def _report(self, **kwargs):
        values = dict(case_id=1, run=0, m=36, d=128, s=4, seed=5, iterations=10, error_vs_ground_truth=0.1,
                      snr_db=20.0, wall_time_s=0.01, terminated_by=TerminatedBy.TOLERANCE)
        values.update(kwargs)
        return BenchReport(**values)

    def test_bench_report__row(self):
        row = self._report(extras={"objective": 1.0}).as_row()

        assert "extras" not in row
        assert row["terminated_by"] == "tolerance"
        assert row["solver"] == "bdr"

    def test_bench_report__negative_error(self):
        with pytest.raises(BdrParameterError):
            self._report(error_vs_ground_truth=-0.1)

    def test_bench_report__nan_error_allowed_for_failed_runs(self):
        row = self._report(error_vs_ground_truth=math.nan, terminated_by=TerminatedBy.DIVERGENCE).as_row()
        assert row["terminated_by"] == "divergence"
