"""Domain types shared by the solver, generators and bench harness"""

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from .const import (
    DEFAULT_GAMMA0,
    DEFAULT_K_FACTOR,
    DEFAULT_MAX_ITER,
    DEFAULT_NU,
    DEFAULT_RHO,
    DEFAULT_TAU,
    DEFAULT_TOL,
    EPS_GUARD,
    GAMMA_BAR_MARGIN,
    GAMMA_WHEN_UNBOUNDED,
)
from .exc import BdrDimensionError, BdrParameterError

DenseVector = np.ndarray
DenseMatrix = np.ndarray

TRACE_COLUMNS = ['n', 'lyapunov', 'objective', 'dx', 'dz', 'dw', 'rel_change', 'gamma']


def as_vector(values: Any, name: str = 'vector') -> DenseVector:
    """Coerce to a finite 1-D float64 array"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise BdrDimensionError(f'{name} must be one-dimensional, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise BdrParameterError(f'{name} has non-finite entries')
    return arr


def as_matrix(values: Any, name: str = 'matrix') -> DenseMatrix:
    """Coerce to a finite 2-D float64 array"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise BdrDimensionError(f'{name} must be two-dimensional, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise BdrParameterError(f'{name} has non-finite entries')
    return arr


def check_same_length(a: DenseVector, b: DenseVector):
    if a.shape != b.shape:
        raise BdrDimensionError(f'Length mismatch: {a.shape} vs {b.shape}')


@enum.unique
class TerminatedBy(str, enum.Enum):
    """Why a run stopped"""
    TOLERANCE = 'tolerance'
    MAX_ITER = 'max_iter'
    DIVERGENCE = 'divergence'
    ERROR = 'error'


class SplittingProblem(ABC):
    """
    Objective f + h - g seen through the evaluations the splitting needs.

    f is differentiable and rho-weakly convex with ell-Lipschitz gradient, g is finite and
    convex, h is lower semicontinuous and may take the value +inf.

    BDR only needs the abstract members. subgrad_g is an optional hook: baseline_pdca_solve
    calls it once per iteration, and the default raises NotImplementedError.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension d of the decision variable"""

    @abstractmethod
    def grad_f(self, x: DenseVector) -> DenseVector:
        ...

    @abstractmethod
    def prox_f(self, y: DenseVector, gamma: float) -> DenseVector:
        ...

    @abstractmethod
    def prox_h(self, v: DenseVector, gamma: float) -> DenseVector:
        ...

    @abstractmethod
    def prox_g(self, v: DenseVector, kappa: float) -> DenseVector:
        ...

    @abstractmethod
    def eval_f(self, x: DenseVector) -> float:
        ...

    @abstractmethod
    def eval_h(self, x: DenseVector) -> float:
        ...

    @abstractmethod
    def eval_g(self, x: DenseVector) -> float:
        ...

    @abstractmethod
    def eval_g_conj(self, w: DenseVector) -> float:
        ...

    @property
    @abstractmethod
    def lipschitz_ell(self) -> float:
        ...

    @property
    def weak_convexity_rho(self) -> float:
        return DEFAULT_RHO

    def subgrad_g(self, x: DenseVector) -> DenseVector:
        """One element of the subdifferential of g at x"""
        raise NotImplementedError(f'{type(self).__name__} does not expose subgradients of g')

    def dual_update(self, w: DenseVector, z: DenseVector, tau: float) -> DenseVector:
        """Prox of g*/tau at w + z/tau, via Moreau's decomposition"""
        if tau <= 0:
            raise BdrParameterError(f'tau must be positive, got {tau}')
        v = tau * w + z
        return (v - self.prox_g(v, tau)) / tau


def relative_change(z_new: DenseVector, z_old: DenseVector) -> float:
    """||z_new - z_old|| / max(||z_old||, EPS_GUARD)"""
    check_same_length(z_new, z_old)
    return float(np.linalg.norm(z_new - z_old) / max(np.linalg.norm(z_old), EPS_GUARD))


def objective_value(problem: SplittingProblem, x: DenseVector) -> float:
    """F(x) = f(x) + h(x) - g(x); +inf when h(x) is +inf"""
    f_val = problem.eval_f(x)
    h_val = problem.eval_h(x)
    if math.isinf(h_val) or math.isinf(f_val):
        return math.inf
    return f_val + h_val - problem.eval_g(x)


@dataclass(frozen=True)
class SolverParams:
    """Step sizes and stopping rules for one BDR run"""
    gamma: float
    tau: float = DEFAULT_TAU
    nu: float = DEFAULT_NU
    rho: float = DEFAULT_RHO
    ell: float = 0.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    adapt_gamma: bool = False
    gamma0: float = DEFAULT_GAMMA0
    k_factor: float = DEFAULT_K_FACTOR
    track_lyapunov: bool = False

    def __post_init__(self):
        if not self.gamma > 0:
            raise BdrParameterError(f'gamma must be positive, got {self.gamma}')
        if not self.tau > 0:
            raise BdrParameterError(f'tau must be positive, got {self.tau}')
        if not 0 < self.nu < 2:
            raise BdrParameterError(f'nu must lie in (0, 2), got {self.nu}')
        if self.rho < 0 or self.ell < 0:
            raise BdrParameterError(f'rho and ell must be nonnegative, got {self.rho}, {self.ell}')
        if not self.tol > 0:
            raise BdrParameterError(f'tol must be positive, got {self.tol}')
        if self.max_iter < 1:
            raise BdrParameterError(f'max_iter must be at least 1, got {self.max_iter}')
        if not self.gamma0 > 0 or not self.k_factor > 0:
            raise BdrParameterError('gamma0 and k_factor must be positive')

    @property
    def gamma_bar(self) -> float:
        from .solver import compute_gamma_bar
        return compute_gamma_bar(self.nu, self.rho, self.ell)

    @property
    def delta(self) -> float:
        from .solver import compute_delta
        return compute_delta(self.nu, self.rho, self.ell, self.gamma)

    @property
    def theory_mode(self) -> bool:
        return not self.adapt_gamma

    @classmethod
    def for_problem(
            cls,
            problem: SplittingProblem,
            adapt_gamma: bool = False,
            nu: float = DEFAULT_NU,
            gamma0: float = DEFAULT_GAMMA0,
            k_factor: float = DEFAULT_K_FACTOR,
            **kwargs) -> 'SolverParams':
        """
        Build parameters from the problem constants.

        Theory mode takes gamma = gamma_bar - 1e-10; heuristic mode starts at k * gamma0.
        """
        from .solver import compute_gamma_bar
        ell = problem.lipschitz_ell
        rho = problem.weak_convexity_rho
        if adapt_gamma:
            gamma = k_factor * gamma0
        else:
            gamma_bar = compute_gamma_bar(nu, rho, ell)
            gamma = GAMMA_WHEN_UNBOUNDED if math.isinf(gamma_bar) else gamma_bar - GAMMA_BAR_MARGIN
        return cls(gamma=gamma, nu=nu, rho=rho, ell=ell, adapt_gamma=adapt_gamma, gamma0=gamma0,
                   k_factor=k_factor, **kwargs)


@dataclass
class IterateState:
    """The quadruple (x, y, z, w) after n iterations"""
    x: DenseVector
    y: DenseVector
    z: DenseVector
    w: DenseVector
    n: int = 0

    def __post_init__(self):
        shapes = {v.shape for v in (self.x, self.y, self.z, self.w)}
        if len(shapes) != 1 or self.x.ndim != 1:
            raise BdrDimensionError(f'Iterate vectors must share one length, got {sorted(shapes)}')

    @classmethod
    def origin(cls, d: int) -> 'IterateState':
        return cls(np.zeros(d), np.zeros(d), np.zeros(d), np.zeros(d), 0)

    @property
    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in (self.x, self.y, self.z, self.w))

    @property
    def max_norm(self) -> float:
        return max(float(np.linalg.norm(v)) for v in (self.x, self.y, self.z, self.w))


class ConvergenceTrace:
    """Per-iteration convergence records, one row per iteration n >= 1"""

    def __init__(self):
        self._rows = []  # type: List[tuple]

    def append(self, n: int, lyapunov: float, objective_at_z: float, dx: float, dz: float, dw: float,
               rel_change: float, gamma_used: float):
        self._rows.append((n, lyapunov, objective_at_z, dx, dz, dw, rel_change, gamma_used))

    def __len__(self) -> int:
        return len(self._rows)

    def column(self, name: str) -> np.ndarray:
        idx = TRACE_COLUMNS.index(name)
        return np.array([row[idx] for row in self._rows], dtype=np.float64)

    @property
    def lyapunov(self) -> np.ndarray:
        return self.column('lyapunov')

    @property
    def objective_at_z(self) -> np.ndarray:
        return self.column('objective')

    @property
    def gamma_used(self) -> np.ndarray:
        return self.column('gamma')

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self._rows, columns=TRACE_COLUMNS)
        return frame.astype({'n': 'int64'})


@dataclass
class BenchReport:
    """Outcome of one solver run inside a suite"""
    case_id: int
    run: int
    m: int
    d: int
    s: int
    seed: int
    iterations: int
    error_vs_ground_truth: float
    snr_db: float
    wall_time_s: float
    terminated_by: TerminatedBy
    solver: str = 'bdr'
    nu: float = DEFAULT_NU
    threads: int = 1
    extras: Dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.error_vs_ground_truth < 0:
            raise BdrParameterError('error_vs_ground_truth must be nonnegative')

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row.pop('extras')
        row['terminated_by'] = TerminatedBy(self.terminated_by).value
        return row
