"""
Seeded benchmark suites over the sensing and reconstruction grids

Each (case, run) pair gets its own seed, derive_seed(seed_base, case_id, run), builds a fresh
instance, solves it and is scored against its ground truth. A failed run becomes a report row
instead of stopping the suite.
"""

import asyncio
import dataclasses
import enum
import logging
import math
import os
import pathlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .const import (
    DEFAULT_GAMMA0,
    DEFAULT_K_FACTOR,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_ITER,
    DEFAULT_NOISE_SIGMA,
    DEFAULT_NU,
    DEFAULT_RUNS,
    DEFAULT_SAMPLING_RATE,
    DEFAULT_TAU,
    DEFAULT_TOL,
    GAUSSIAN_CASES,
    PDCT_CASES,
    RECONSTRUCTION_CASES,
)
from .core import BenchReport, DenseVector, SolverParams, TerminatedBy
from .exc import (
    BdrConfigError,
    BdrDimensionError,
    BdrDivergenceError,
    BdrError,
    BdrParameterError,
    BdrUndefinedMetricError,
)
from .generators import (
    CsInstance,
    ReconstructionSpec,
    SignalKind,
    case_dims,
    derive_seed,
    load_instance,
    load_signal_csv,
    make_case_instance,
    make_reconstruction_instance,
    make_signal_instance,
    synthetic_signal,
)
from .solver import BdrResult, baseline_pdca_solve, bdr_solve

try:
    import ujson as json
except ImportError:
    import json

_LOGGER = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

RUNS_COLUMNS = ['case_id', 'run', 'solver', 'nu', 'm', 'd', 's', 'seed', 'iterations', 'error_vs_ground_truth',
                'snr_db', 'wall_time_s', 'terminated_by', 'threads']
SUMMARY_COLUMNS = ['case_id', 'solver', 'nu', 'm', 'd', 's', 'runs', 'iterations', 'error_vs_ground_truth',
                   'snr_db', 'wall_time_s', 'threads']
FLOAT_FORMAT = '%.17g'

SOLVER_BDR = 'bdr'
SOLVER_PDCA = 'pdca'

# Synthetic signals never shorter than this after scaling
MIN_SIGNAL_LENGTH = 8


@enum.unique
class Suite(str, enum.Enum):
    GAUSSIAN_CASES = 'gaussian_cases'
    PDCT_CASES = 'pdct_cases'
    SIGNAL_CASES = 'signal_cases'
    RECONSTRUCTION = 'reconstruction'
    SINGLE = 'single'


@enum.unique
class GammaMode(str, enum.Enum):
    THEORY = 'theory'
    HEURISTIC = 'heuristic'


# Short names accepted on the command line
SUITE_ALIASES = {
    'gaussian': Suite.GAUSSIAN_CASES,
    'pdct': Suite.PDCT_CASES,
    'signal': Suite.SIGNAL_CASES,
}


def _default_cases(suite: Suite) -> List[int]:
    if suite in (Suite.GAUSSIAN_CASES, Suite.SIGNAL_CASES):
        return sorted(GAUSSIAN_CASES)
    if suite == Suite.PDCT_CASES:
        return sorted(PDCT_CASES)
    if suite == Suite.RECONSTRUCTION:
        return sorted(RECONSTRUCTION_CASES)
    return [0]


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything that determines a suite's numbers.

    Config files are flat JSON objects whose keys are these field names ('lambda' is accepted
    for lam). (config, seed_base, threads) fix every numeric output except wall times.
    """
    suite: Suite = Suite.GAUSSIAN_CASES
    case_ids: Optional[Tuple[int, ...]] = None
    runs: int = DEFAULT_RUNS
    lam: float = DEFAULT_LAMBDA
    seed_base: int = 0
    output_dir: Optional[str] = None
    scale: float = 1.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    nu: float = DEFAULT_NU
    tau: float = DEFAULT_TAU
    gamma_mode: Optional[GammaMode] = None
    gamma0: float = DEFAULT_GAMMA0
    k_factor: float = DEFAULT_K_FACTOR
    track_lyapunov: bool = False
    baseline: bool = False
    extrapolate: bool = False
    threads: int = 1
    write_traces: bool = True
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    signal_kind: SignalKind = SignalKind.SMOOTH_SINUSOID
    signal_path: Optional[str] = None
    sampling_rate: Optional[float] = None
    instance_path: Optional[str] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'suite', Suite(self.suite))
            object.__setattr__(self, 'signal_kind', SignalKind(self.signal_kind))
            if self.gamma_mode is not None:
                object.__setattr__(self, 'gamma_mode', GammaMode(self.gamma_mode))
        except ValueError as exc:
            raise BdrConfigError(str(exc)) from exc
        if self.case_ids is not None:
            object.__setattr__(self, 'case_ids', tuple(int(c) for c in self.case_ids))
        checks = [
            ('runs', self.runs >= 1, 'must be at least 1'),
            ('scale', 0 < self.scale <= 1, 'must lie in (0, 1]'),
            ('lam', self.lam > 0, 'must be positive'),
            ('tol', self.tol > 0, 'must be positive'),
            ('max_iter', self.max_iter >= 1, 'must be at least 1'),
            ('nu', 0 < self.nu < 2, 'must lie in (0, 2)'),
            ('tau', self.tau > 0, 'must be positive'),
            ('gamma0', self.gamma0 > 0, 'must be positive'),
            ('k_factor', self.k_factor > 0, 'must be positive'),
            ('threads', self.threads >= 1, 'must be at least 1'),
            ('seed_base', self.seed_base >= 0, 'must be nonnegative'),
            ('noise_sigma', self.noise_sigma >= 0, 'must be nonnegative'),
            ('sampling_rate', self.sampling_rate is None or 0 < self.sampling_rate <= 1, 'must lie in (0, 1]'),
            ('instance_path', self.suite != Suite.SINGLE or self.instance_path is not None,
             'is required for the single suite'),
        ]
        for key, ok, problem in checks:
            if not ok:
                raise BdrConfigError(f'{key} {problem}, got {getattr(self, key)!r}', key=key)
        allowed = set(_default_cases(self.suite))
        if self.suite == Suite.RECONSTRUCTION and self.signal_path is not None:
            allowed = {0}
        bad = [c for c in self.cases if c not in allowed]
        if bad:
            raise BdrConfigError(f'case_ids {bad} do not belong to suite {self.suite.value}', key='case_ids')

    @property
    def cases(self) -> List[int]:
        if self.case_ids is not None:
            return list(self.case_ids)
        if self.suite == Suite.RECONSTRUCTION and self.signal_path is not None:
            return [0]
        return _default_cases(self.suite)

    @property
    def adapt_gamma(self) -> bool:
        if self.gamma_mode is None:
            return self.suite == Suite.RECONSTRUCTION
        return self.gamma_mode == GammaMode.HEURISTIC


CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}
KEY_ALIASES = {'lambda': 'lam'}


def _coerce(key: str, value: Any) -> Any:
    """Bring a JSON or command-line value to the field's type"""
    if value is None:
        return None
    try:
        if key == 'case_ids':
            if isinstance(value, str):
                value = [v for v in value.split(',') if v.strip()]
            return tuple(int(v) for v in value)
        if key == 'suite' and isinstance(value, str):
            return SUITE_ALIASES.get(value, value)
        if key in ('runs', 'seed_base', 'max_iter', 'threads'):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f'{value!r} is not an integer')
            return int(value)
        if key in ('lam', 'scale', 'tol', 'nu', 'tau', 'gamma0', 'k_factor', 'noise_sigma', 'sampling_rate'):
            return float(value)
        if key in ('track_lyapunov', 'baseline', 'extrapolate', 'write_traces'):
            if not isinstance(value, bool):
                raise ValueError(f'{value!r} is not a boolean')
            return value
    except (TypeError, ValueError) as exc:
        raise BdrConfigError(f'Bad value for {key}: {exc}', key=key) from exc
    return value


def parse_config(path: Optional[PathLike] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Build a validated config from an optional JSON file plus overrides.

    Overrides whose value is None are ignored, so unset command-line flags keep the file value.
    """
    raw = {}  # type: Dict[str, Any]
    if path is not None:
        try:
            with open(path, encoding='utf-8') as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise BdrConfigError(f'Cannot read config {path}: {exc}') from exc
        except ValueError as exc:
            raise BdrConfigError(f'Config {path} is not valid JSON: {exc}') from exc
        if not isinstance(raw, dict):
            raise BdrConfigError(f'Config {path} must hold a flat JSON object')
    merged = dict(raw)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    kwargs = {}
    for key, value in merged.items():
        name = KEY_ALIASES.get(key, key)
        if name not in CONFIG_KEYS:
            raise BdrConfigError(f'Unknown config key {key!r}', key=key)
        kwargs[name] = _coerce(name, value)
    config = ExperimentConfig(**kwargs)
    _LOGGER.debug('Parsed config: %s', config)
    return config


def error_vs_ground_truth(reference: DenseVector, estimate: DenseVector) -> float:
    """||estimate - reference|| / ||reference||"""
    ref_norm = float(np.linalg.norm(reference))
    if ref_norm == 0:
        raise BdrUndefinedMetricError('Relative error needs a nonzero reference')
    return float(np.linalg.norm(estimate - reference)) / ref_norm


def snr_db(u: DenseVector, u_hat: DenseVector) -> float:
    """20 log10(||u|| / ||u - u_hat||); math.inf for an exact match"""
    if u.shape != u_hat.shape:
        raise BdrDimensionError(f'Signal lengths differ: {u.shape} vs {u_hat.shape}')
    u_norm = float(np.linalg.norm(u))
    if u_norm == 0:
        raise BdrUndefinedMetricError('SNR needs a nonzero reference signal')
    err = float(np.linalg.norm(u - u_hat))
    if err == 0:
        return math.inf
    return 20.0 * math.log10(u_norm / err)


@dataclass
class SuiteResult:
    reports: List[BenchReport]
    traces: Dict[str, pd.DataFrame] = field(default_factory=dict, repr=False)

    def summary(self) -> pd.DataFrame:
        return summarize(self.reports)


class _SuiteData:
    """Inputs shared read-only by every run of a suite"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.signal = None  # type: Optional[DenseVector]
        self.instance = None  # type: Optional[CsInstance]
        if config.signal_path is not None and config.suite in (Suite.SIGNAL_CASES, Suite.RECONSTRUCTION):
            self.signal = load_signal_csv(config.signal_path)
        if config.suite == Suite.SINGLE:
            self.instance = load_instance(config.instance_path)

    def signal_window(self, d: int, seed: int) -> DenseVector:
        if self.signal is None:
            return synthetic_signal(self.config.signal_kind, d, derive_seed(seed, 9))
        if self.signal.shape[0] < d:
            raise BdrParameterError(f'Signal has {self.signal.shape[0]} samples, case needs {d}')
        return self.signal[:d]

    def reconstruction_dims(self, case_id: int) -> Tuple[int, float]:
        if case_id == 0:
            return self.signal.shape[0], self.config.sampling_rate or DEFAULT_SAMPLING_RATE
        d, rate = RECONSTRUCTION_CASES[case_id]
        if self.config.sampling_rate is not None:
            rate = self.config.sampling_rate
        return max(MIN_SIGNAL_LENGTH, int(round(d * self.config.scale))), rate

    def dims(self, case_id: int) -> Tuple[int, int, int]:
        suite = self.config.suite
        if suite == Suite.SINGLE:
            inst = self.instance
            s = 0 if inst.ground_truth is None else int(np.count_nonzero(inst.ground_truth))
            return inst.m, inst.d, s
        if suite == Suite.RECONSTRUCTION:
            d, rate = self.reconstruction_dims(case_id)
            return int(round(rate * d)), d, 0
        return case_dims(case_id, self.config.scale)

    def build(self, case_id: int, seed: int) -> CsInstance:
        config = self.config
        if config.suite == Suite.SINGLE:
            return self.instance
        if config.suite in (Suite.GAUSSIAN_CASES, Suite.PDCT_CASES):
            return make_case_instance(case_id, seed, config.scale, config.lam, config.noise_sigma)
        if config.suite == Suite.SIGNAL_CASES:
            m, d, _ = case_dims(case_id, config.scale)
            return make_signal_instance(self.signal_window(d, seed), m, config.lam, seed, config.noise_sigma)
        d, rate = self.reconstruction_dims(case_id)
        spec = ReconstructionSpec.sample(self.signal_window(d, seed), rate, seed, config.noise_sigma)
        return make_reconstruction_instance(spec, config.lam)


def _score(instance: CsInstance, z: DenseVector) -> Tuple[float, float]:
    """(relative error, SNR) of a solution against what the instance knows"""
    if instance.signal is not None and instance.mask is not None:
        u_hat = instance.recover_signal(z)
        return error_vs_ground_truth(instance.signal, u_hat), snr_db(instance.signal, u_hat)
    if instance.ground_truth is None:
        return math.nan, math.nan
    return error_vs_ground_truth(instance.ground_truth, z), snr_db(instance.ground_truth, z)


def _trace_name(case_id: int, run: int, solver: str) -> str:
    suffix = '' if solver == SOLVER_BDR else f'_{solver}'
    return f'trace_{case_id}_{run}{suffix}.csv'


def _run_one(data: _SuiteData, case_id: int, run: int) -> Tuple[List[BenchReport], Dict[str, pd.DataFrame]]:
    config = data.config
    seed = derive_seed(config.seed_base, case_id, run)
    m, d, s = data.dims(case_id)
    base = dict(case_id=case_id, run=run, m=m, d=d, s=s, seed=seed, nu=config.nu, threads=config.threads)
    solvers = [SOLVER_BDR, SOLVER_PDCA] if config.baseline else [SOLVER_BDR]

    reports = []
    traces = {}
    try:
        instance = data.build(case_id, seed)
        problem = instance.to_problem()
    except BdrError as exc:
        _LOGGER.warning('Case %d run %d: could not build instance: %s', case_id, run, exc)
        failed = dict(iterations=0, error_vs_ground_truth=math.nan, snr_db=math.nan, wall_time_s=0.0,
                      terminated_by=TerminatedBy.ERROR, extras={'error': str(exc)})
        return [BenchReport(solver=name, **base, **failed) for name in solvers], traces

    for name in solvers:
        started = time.monotonic()
        try:
            if name == SOLVER_BDR:
                params = SolverParams.for_problem(
                    problem, adapt_gamma=config.adapt_gamma, nu=config.nu, gamma0=config.gamma0,
                    k_factor=config.k_factor, tau=config.tau, tol=config.tol, max_iter=config.max_iter,
                    track_lyapunov=config.track_lyapunov)
                result = bdr_solve(problem, params)  # type: BdrResult
            else:
                result = baseline_pdca_solve(problem, tol=config.tol, max_iter=config.max_iter,
                                             extrapolate=config.extrapolate)
            error, snr = _score(instance, result.solution)
            reports.append(BenchReport(
                solver=name, **base, iterations=result.iterations, error_vs_ground_truth=error, snr_db=snr,
                wall_time_s=time.monotonic() - started, terminated_by=result.terminated_by,
                extras={'objective': result.objective, 'stationarity_gap': result.stationarity_gap}))
            if config.write_traces:
                traces[_trace_name(case_id, run, name)] = result.trace.to_frame()
        except BdrError as exc:
            marker = TerminatedBy.DIVERGENCE if isinstance(exc, BdrDivergenceError) else TerminatedBy.ERROR
            _LOGGER.warning('Case %d run %d (%s) failed: %s', case_id, run, name, exc)
            reports.append(BenchReport(
                solver=name, **base, iterations=getattr(exc, 'iterations', 0), error_vs_ground_truth=math.nan,
                snr_db=math.nan, wall_time_s=time.monotonic() - started, terminated_by=marker,
                extras={'error': str(exc)}))
    _LOGGER.debug('Case %d run %d done', case_id, run)
    return reports, traces


def _jobs(config: ExperimentConfig) -> List[Tuple[int, int]]:
    return [(case_id, run) for case_id in config.cases for run in range(config.runs)]


def _collect(config: ExperimentConfig, outcomes: Iterable[Tuple[List[BenchReport], Dict[str, pd.DataFrame]]]) -> SuiteResult:
    result = SuiteResult(reports=[])
    for reports, traces in outcomes:
        result.reports.extend(reports)
        result.traces.update(traces)
    if config.output_dir is not None:
        write_report(result.reports, result.traces, config.output_dir)
    return result


def run_suite(config: ExperimentConfig) -> SuiteResult:
    """Run every (case, run) pair in order and write reports when output_dir is set"""
    data = _SuiteData(config)
    _LOGGER.info('Running %s: cases %s, %d runs each', config.suite.value, config.cases, config.runs)
    return _collect(config, (_run_one(data, case_id, run) for case_id, run in _jobs(config)))


async def async_run_suite(config: ExperimentConfig) -> SuiteResult:
    """run_suite with runs spread over config.threads worker threads; results keep job order"""
    data = _SuiteData(config)
    loop = asyncio.get_running_loop()
    _LOGGER.info('Running %s on %d threads: cases %s, %d runs each', config.suite.value, config.threads,
                 config.cases, config.runs)
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [loop.run_in_executor(pool, _run_one, data, case_id, run) for case_id, run in _jobs(config)]
        outcomes = await asyncio.gather(*futures)
    return _collect(config, outcomes)


def run_nu_sweep(config: ExperimentConfig, nus: Sequence[float],
                 runner: Callable[[ExperimentConfig], SuiteResult] = run_suite) -> SuiteResult:
    """Repeat a suite for each relaxation parameter; rows are tagged by nu, traces are not kept"""
    if not nus:
        raise BdrConfigError('nu sweep needs at least one value', key='nu')
    combined = SuiteResult(reports=[])
    for nu in nus:
        sub = dataclasses.replace(config, nu=float(nu), output_dir=None, write_traces=False)
        combined.reports.extend(runner(sub).reports)
    if config.output_dir is not None:
        write_report(combined.reports, {}, config.output_dir)
    return combined


def summarize(reports: Sequence[BenchReport]) -> pd.DataFrame:
    """Means over runs per (case, solver, nu)"""
    runs = pd.DataFrame([r.as_row() for r in reports], columns=RUNS_COLUMNS)
    if runs.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = runs.groupby(['case_id', 'solver', 'nu'], sort=False)
    summary = grouped.agg(
        m=('m', 'first'),
        d=('d', 'first'),
        s=('s', 'first'),
        runs=('run', 'count'),
        iterations=('iterations', 'mean'),
        error_vs_ground_truth=('error_vs_ground_truth', 'mean'),
        snr_db=('snr_db', 'mean'),
        wall_time_s=('wall_time_s', 'mean'),
        threads=('threads', 'first'),
    ).reset_index()
    return summary[SUMMARY_COLUMNS]


def write_report(reports: Sequence[BenchReport], traces: Dict[str, pd.DataFrame], output_dir: PathLike):
    """Write runs.csv, summary.csv and one trace file per solved run"""
    out = pathlib.Path(output_dir)
    path = out
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / 'runs.csv'
        runs = pd.DataFrame([r.as_row() for r in reports], columns=RUNS_COLUMNS)
        runs.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        path = out / 'summary.csv'
        summarize(reports).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        for name, frame in traces.items():
            path = out / name
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as exc:
        raise BdrError(f'Cannot write report to {path}: {exc}') from exc
    _LOGGER.info('Wrote %d run rows and %d traces to %s', len(reports), len(traces), out)
