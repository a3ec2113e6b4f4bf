"""
Backward-Douglas-Rachford splitting for min f + h - g, and a proximal DCA baseline.

One BDR step from (x, y, z, w):

    x+ = prox_{gamma f}(y)
    w+ = prox_{g*/tau}(w + z/tau)
    z+ = prox_{gamma h}(2 x+ - y + gamma w+)
    y+ = y + nu (z+ - x+)

With g = 0 and nu = 1 this is plain Douglas-Rachford.
"""

import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .const import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    DIVERGENCE_BOUND,
    HEURISTIC_NORM_BOUND,
    HEURISTIC_SHRINK,
    HEURISTIC_STEP_SCALE,
    PDCA_RESTART_EVERY,
)
from .core import (
    ConvergenceTrace,
    DenseVector,
    IterateState,
    SolverParams,
    SplittingProblem,
    TerminatedBy,
    objective_value,
    relative_change,
)
from .exc import BdrDimensionError, BdrDivergenceError, BdrDomainError, BdrParameterError

_LOGGER = logging.getLogger(__name__)


@dataclass
class BdrResult:
    """Final iterate, per-iteration trace and why the loop stopped"""
    state: IterateState
    trace: ConvergenceTrace
    terminated_by: TerminatedBy
    stationarity_gap: float
    objective: float = math.nan
    wall_time_s: float = 0.0

    @property
    def iterations(self) -> int:
        return self.state.n

    @property
    def solution(self) -> DenseVector:
        return self.state.z


def compute_gamma_bar(nu: float, rho: float, ell: float) -> float:
    """
    Largest admissible step size, (-nu rho + sqrt(nu^2 rho^2 + 8 (2 - nu) ell^2)) / (4 ell^2).

    Returns math.inf when ell = 0.
    """
    if not 0 < nu < 2:
        raise BdrParameterError(f'nu must lie in (0, 2), got {nu}')
    if rho < 0 or ell < 0:
        raise BdrParameterError(f'rho and ell must be nonnegative, got {rho}, {ell}')
    if ell == 0:
        return math.inf
    root = math.sqrt(nu * nu * rho * rho + 8.0 * (2.0 - nu) * ell * ell)
    return (-nu * rho + root) / (4.0 * ell * ell)


def compute_delta(nu: float, rho: float, ell: float, gamma: float) -> float:
    """Descent coefficient (2 - nu - nu rho gamma - 2 ell^2 gamma^2) / (nu gamma); positive iff gamma < gamma_bar"""
    if not gamma > 0:
        raise BdrParameterError(f'gamma must be positive, got {gamma}')
    return (2.0 - nu - nu * rho * gamma - 2.0 * ell * ell * gamma * gamma) / (nu * gamma)


def lyapunov_eval(state: IterateState, problem: SplittingProblem, params: SolverParams) -> float:
    """Merit function F(x, y, z, w) whose decrease drives convergence"""
    x, y, z, w = state.x, state.y, state.z, state.w
    conj = problem.eval_g_conj(w)
    if math.isinf(conj):
        raise BdrDomainError(f'w (norm {np.linalg.norm(w):.6g}) lies outside the domain of g*')
    gamma, nu = params.gamma, params.nu
    x_y, y_z, x_z = x - y, y - z, x - z
    return (problem.eval_f(x) + problem.eval_h(z) + conj - float(w @ z)
            + float(x_y @ x_y) / (2.0 * gamma)
            - float(y_z @ y_z) / (2.0 * gamma)
            + (1.0 - nu) / gamma * float(x_z @ x_z))


def bdr_step(state: IterateState, problem: SplittingProblem, params: SolverParams) -> IterateState:
    gamma = params.gamma
    if state.x.shape != (problem.dim,):
        raise BdrDimensionError(f'State has length {state.x.shape[0]}, problem has dimension {problem.dim}')
    x = problem.prox_f(state.y, gamma)
    w = problem.dual_update(state.w, state.z, params.tau)
    z = problem.prox_h(2.0 * x - state.y + gamma * w, gamma)
    y = state.y + params.nu * (z - x)
    return IterateState(x=x, y=y, z=z, w=w, n=state.n + 1)


def heuristic_gamma_update(gamma: float, gamma0: float, n: int, x_prev: DenseVector,
                           x_next: DenseVector) -> float:
    """Shrink an over-large step to max(gamma / 2, 0.9999 gamma0) when x starts running away"""
    if n < 1:
        raise BdrParameterError(f'n must be at least 1, got {n}')
    if gamma <= gamma0:
        return gamma
    runaway = (np.linalg.norm(x_next - x_prev) > HEURISTIC_STEP_SCALE / n
               or np.linalg.norm(x_prev) > HEURISTIC_NORM_BOUND)
    if not runaway:
        return gamma
    return max(gamma / 2.0, HEURISTIC_SHRINK * gamma0)


def stationarity_gap(state: IterateState, params: SolverParams) -> float:
    """||x - z|| / gamma"""
    return float(np.linalg.norm(state.x - state.z)) / params.gamma


def _check_divergence(state: IterateState, params: SolverParams):
    if not state.is_finite:
        raise BdrDivergenceError(f'Non-finite iterate at n={state.n}', iterations=state.n)
    if not params.adapt_gamma and state.max_norm > DIVERGENCE_BOUND:
        raise BdrDivergenceError(f'Iterate norm {state.max_norm:.3g} exceeds {DIVERGENCE_BOUND:.0e} at n={state.n}',
                                 iterations=state.n)


def bdr_solve(problem: SplittingProblem, params: SolverParams,
              init: Optional[IterateState] = None) -> BdrResult:
    """
    Iterate bdr_step from init (the origin by default) until the relative change of z drops
    below params.tol or params.max_iter steps have been taken.

    In theory mode gamma must be below gamma_bar; in heuristic mode gamma may shrink along the run.
    """
    if params.theory_mode:
        gamma_bar = compute_gamma_bar(params.nu, params.rho, params.ell)
        if not params.gamma < gamma_bar:
            raise BdrParameterError(f'gamma={params.gamma!r} must be below gamma_bar={gamma_bar!r}')
    state = IterateState.origin(problem.dim) if init is None else init
    if state.x.shape != (problem.dim,):
        raise BdrDimensionError(f'Initial state has length {state.x.shape[0]}, expected {problem.dim}')

    trace = ConvergenceTrace()
    terminated_by = TerminatedBy.MAX_ITER
    started = time.monotonic()
    for _ in range(params.max_iter):
        gamma_used = params.gamma
        nxt = bdr_step(state, problem, params)
        _check_divergence(nxt, params)
        rel = relative_change(nxt.z, state.z)
        lyap = lyapunov_eval(nxt, problem, params) if params.track_lyapunov else math.nan
        trace.append(
            nxt.n,
            lyap,
            objective_value(problem, nxt.z),
            float(np.linalg.norm(nxt.x - state.x)),
            float(np.linalg.norm(nxt.z - state.z)),
            float(np.linalg.norm(nxt.w - state.w)),
            rel,
            gamma_used,
        )
        prev, state = state, nxt
        if rel < params.tol:
            terminated_by = TerminatedBy.TOLERANCE
            break
        if params.adapt_gamma:
            gamma = heuristic_gamma_update(params.gamma, params.gamma0, state.n, prev.x, state.x)
            if gamma != params.gamma:
                _LOGGER.debug('n=%d: step size %r -> %r', state.n, params.gamma, gamma)
                params = dataclasses.replace(params, gamma=gamma)

    elapsed = time.monotonic() - started
    _LOGGER.debug('BDR stopped by %s after %d iterations (%.3fs)', terminated_by.value, state.n, elapsed)
    return BdrResult(
        state=state,
        trace=trace,
        terminated_by=terminated_by,
        stationarity_gap=stationarity_gap(state, params),
        objective=objective_value(problem, state.z),
        wall_time_s=elapsed,
    )


def baseline_pdca_solve(problem: SplittingProblem, ell: Optional[float] = None, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER, extrapolate: bool = False,
                        init: Optional[DenseVector] = None) -> BdrResult:
    """
    Proximal DCA: z+ = prox_{h/L}(v - (grad f(v) - xi) / L) with xi a subgradient of g at z.

    Without extrapolation v = z. With it, v carries FISTA momentum that restarts every
    PDCA_RESTART_EVERY iterations and whenever the objective goes up.
    """
    L = problem.lipschitz_ell if ell is None else ell
    if not L > 0:
        raise BdrParameterError(f'The baseline needs ell > 0, got {L}')
    if not tol > 0 or max_iter < 1:
        raise BdrParameterError('tol must be positive and max_iter at least 1')
    step = 1.0 / L
    z = np.zeros(problem.dim) if init is None else np.asarray(init, dtype=np.float64)
    z_prev = z
    t = 1.0
    obj = objective_value(problem, z)
    trace = ConvergenceTrace()
    terminated_by = TerminatedBy.MAX_ITER
    n = 0
    v = z
    started = time.monotonic()
    for n in range(1, max_iter + 1):
        if extrapolate:
            t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
            v = z + (t - 1.0) / t_next * (z - z_prev)
            t = t_next
        else:
            v = z
        xi = problem.subgrad_g(z)
        z_new = problem.prox_h(v - step * (problem.grad_f(v) - xi), step)
        if not np.all(np.isfinite(z_new)):
            raise BdrDivergenceError(f'Non-finite baseline iterate at n={n}', iterations=n)
        obj_new = objective_value(problem, z_new)
        rel = relative_change(z_new, z)
        dz = float(np.linalg.norm(z_new - z))
        trace.append(n, math.nan, obj_new, dz, dz, 0.0, rel, step)
        if extrapolate and (obj_new > obj or n % PDCA_RESTART_EVERY == 0):
            t = 1.0
            z_prev = z_new
        else:
            z_prev = z
        z, obj = z_new, obj_new
        if rel < tol:
            terminated_by = TerminatedBy.TOLERANCE
            break

    elapsed = time.monotonic() - started
    _LOGGER.debug('Baseline stopped by %s after %d iterations', terminated_by.value, n)
    state = IterateState(x=z.copy(), y=z.copy(), z=z, w=problem.subgrad_g(z), n=n)
    return BdrResult(
        state=state,
        trace=trace,
        terminated_by=terminated_by,
        stationarity_gap=L * float(np.linalg.norm(z - v)),
        objective=obj,
        wall_time_s=elapsed,
    )
