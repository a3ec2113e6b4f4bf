"""Checks of the iterate relations a BDR run must satisfy, and a linear-rate fit"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .core import DenseVector, IterateState, SolverParams, SplittingProblem, objective_value
from .exc import BdrParameterError

_LOGGER = logging.getLogger(__name__)

MIN_RATE_R2 = 0.9


def gradient_relation_residual(y_prev: DenseVector, x_next: DenseVector, problem: SplittingProblem,
                               gamma: float) -> float:
    """||y_n - x_{n+1} - gamma grad f(x_{n+1})||, zero up to rounding after every step"""
    return float(np.linalg.norm(y_prev - x_next - gamma * problem.grad_f(x_next)))


def y_step_bound_slack(y_prev: DenseVector, y_next: DenseVector, x_next: DenseVector, x_after: DenseVector,
                       gamma: float, ell: float) -> float:
    """
    (1 + gamma ell) ||x_{n+2} - x_{n+1}|| - ||y_{n+1} - y_n||.

    Nonnegative along any run since y_n = (I + gamma grad f)(x_{n+1}).
    """
    return ((1.0 + gamma * ell) * float(np.linalg.norm(x_after - x_next))
            - float(np.linalg.norm(y_next - y_prev)))


def sandwich_residual(lyapunov: float, state: IterateState, problem: SplittingProblem,
                      params: SolverParams) -> float:
    """F(v_n) - F(z_n) - (1/(2 gamma) - ell/2) ||x_n - z_n||^2, nonnegative at every iterate n >= 1"""
    gap = state.x - state.z
    coef = 1.0 / (2.0 * params.gamma) - params.ell / 2.0
    return lyapunov - objective_value(problem, state.z) - coef * float(gap @ gap)


def fenchel_young_gap(w: DenseVector, z: DenseVector, problem: SplittingProblem) -> float:
    """g(z) + g*(w) - <w, z>; zero exactly when w is a subgradient of g at z"""
    return problem.eval_g(z) + problem.eval_g_conj(w) - float(w @ z)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: int

    @property
    def is_linear(self) -> bool:
        return self.slope < 0 and self.r_squared >= MIN_RATE_R2

    @property
    def contraction(self) -> float:
        """Per-iteration factor exp(slope)"""
        return math.exp(self.slope)


def fit_linear_rate(residuals: Sequence[float], tail_fraction: float = 0.5, floor: float = 1e-14) -> RateFit:
    """
    Least-squares line through log residuals over the tail of a run.

    Residuals at or below floor are dropped first (they sit at rounding level). A weak fit
    is reported through warnings, not raised.
    """
    if not 0 < tail_fraction <= 1:
        raise BdrParameterError(f'tail_fraction must lie in (0, 1], got {tail_fraction}')
    r = np.asarray(residuals, dtype=np.float64)
    idx = np.flatnonzero(r > floor)
    if idx.size < 3:
        raise BdrParameterError(f'Need at least 3 residuals above {floor:g} to fit a rate, got {idx.size}')
    idx = idx[int(math.floor(idx.size * (1.0 - tail_fraction))):]
    if idx.size < 3:
        idx = np.flatnonzero(r > floor)[-3:]
    fit = stats.linregress(idx.astype(np.float64), np.log(r[idx]))
    result = RateFit(slope=float(fit.slope), intercept=float(fit.intercept),
                     r_squared=float(fit.rvalue ** 2), points=int(idx.size))
    if not result.is_linear:
        warnings.warn(f'Tail residuals do not look linearly convergent '
                      f'(slope={result.slope:.3g}, R^2={result.r_squared:.3f})', RuntimeWarning)
    _LOGGER.debug('Rate fit over %d points: %s', result.points, result)
    return result
