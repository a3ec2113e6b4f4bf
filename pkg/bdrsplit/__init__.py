"""Backward-Douglas-Rachford splitting for difference-of-convex sparse recovery"""

from .bench import ExperimentConfig, async_run_suite, parse_config, run_nu_sweep, run_suite, snr_db, write_report
from .core import (
    BenchReport,
    ConvergenceTrace,
    IterateState,
    SolverParams,
    SplittingProblem,
    TerminatedBy,
    objective_value,
    relative_change,
)
from .exc import (
    BdrError,
    BdrConfigError,
    BdrDimensionError,
    BdrDivergenceError,
    BdrDomainError,
    BdrParameterError,
    BdrSignalFileError,
    BdrStaleCacheError,
    BdrUndefinedMetricError,
    BdrUnsupportedError,
)
from .problem import CsProblem
from .prox import QuadraticProxCache, power_iteration_ell, prox_l2_norm, prox_quadratic, soft_threshold, w_update
from .solver import (
    BdrResult,
    baseline_pdca_solve,
    bdr_solve,
    bdr_step,
    compute_delta,
    compute_gamma_bar,
    heuristic_gamma_update,
    lyapunov_eval,
    stationarity_gap,
)

__version__ = '0.1.0'
