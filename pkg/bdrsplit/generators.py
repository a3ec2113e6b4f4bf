"""
Seeded construction of every experimental object

All generators are pure functions of their dimensions and seed. Seeds feed
``numpy.random.default_rng``; per-run seeds come from ``derive_seed``, a ``SeedSequence``
hash of (seed_base, *keys), so adding runs never reshuffles earlier ones.
"""

import enum
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import fft

from .const import (
    DEFAULT_LAMBDA,
    DEFAULT_NOISE_SIGMA,
    GAUSSIAN_CASES,
    PDCT_CASES,
    TEST_CASES,
)
from .core import DenseMatrix, DenseVector, as_matrix, as_vector
from .exc import BdrDimensionError, BdrParameterError, BdrSignalFileError
from .problem import CsProblem

try:
    import re2 as re
except ImportError:
    import re

_LOGGER = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

DUMP_MAGIC = '# bdrsplit instance'
DCT_METHODS = ('fft', 'dense')
_PARSER_LINE = re.compile(r'line (\d+)')


@enum.unique
class InstanceKind(str, enum.Enum):
    """How an instance was produced"""
    GAUSSIAN = 'gaussian'
    PDCT = 'pdct'
    RECONSTRUCTION = 'reconstruction'
    SIGNAL = 'signal'


@enum.unique
class SignalKind(str, enum.Enum):
    """Synthetic stand-ins for measured power-system signals"""
    SMOOTH_SINUSOID = 'smooth_sinusoid'
    PIECEWISE_LOAD = 'piecewise_load'


def derive_seed(seed_base: int, *keys: int) -> int:
    """Stable 64-bit seed for (seed_base, *keys)"""
    if seed_base < 0 or any(k < 0 for k in keys):
        raise BdrParameterError('Seeds and seed keys must be nonnegative')
    state = np.random.SeedSequence([seed_base, *keys]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def case_kind(case_id: int) -> InstanceKind:
    if case_id in GAUSSIAN_CASES:
        return InstanceKind.GAUSSIAN
    if case_id in PDCT_CASES:
        return InstanceKind.PDCT
    raise BdrParameterError(f'Unknown test case {case_id}')


def case_dims(case_id: int, scale: float = 1.0) -> Tuple[int, int, int]:
    """(m, d, s) of a test case, uniformly scaled and rounded"""
    if case_id not in TEST_CASES:
        raise BdrParameterError(f'Unknown test case {case_id}')
    if not 0 < scale <= 1:
        raise BdrParameterError(f'scale must lie in (0, 1], got {scale}')
    return tuple(max(1, int(round(n * scale))) for n in TEST_CASES[case_id])


def _dct_entries(rows: np.ndarray, cols: np.ndarray, d: int) -> DenseMatrix:
    """Entries D[rows, cols] of the orthonormal DCT-II matrix"""
    k = np.asarray(rows, dtype=np.float64)[:, None]
    j = np.asarray(cols, dtype=np.float64)[None, :]
    block = math.sqrt(2.0 / d) * np.cos(np.pi * (2 * j + 1) * k / (2 * d))
    block[np.asarray(rows) == 0, :] = math.sqrt(1.0 / d)
    return block


def dct_matrix(d: int) -> DenseMatrix:
    """Orthonormal DCT-II matrix D; the inverse DCT is D^T"""
    if d < 1:
        raise BdrParameterError(f'd must be at least 1, got {d}')
    idx = np.arange(d)
    return _dct_entries(idx, idx, d)


def _check_transform_input(v: DenseVector, d: Optional[int], method: str) -> DenseVector:
    v = as_vector(v)
    if d is not None and v.shape[0] != d:
        raise BdrDimensionError(f'Expected length {d}, got {v.shape[0]}')
    if method not in DCT_METHODS:
        raise BdrParameterError(f'Unknown DCT method {method!r}')
    return v


def apply_dct(u: DenseVector, d: Optional[int] = None, method: str = 'fft') -> DenseVector:
    """D u"""
    u = _check_transform_input(u, d, method)
    if method == 'dense':
        return dct_matrix(u.shape[0]) @ u
    return fft.dct(u, type=2, norm='ortho')


def apply_idct(x: DenseVector, d: Optional[int] = None, method: str = 'fft') -> DenseVector:
    """D^T x"""
    x = _check_transform_input(x, d, method)
    if method == 'dense':
        return dct_matrix(x.shape[0]).T @ x
    return fft.idct(x, type=2, norm='ortho')


def gaussian_matrix(m: int, d: int, seed: int, normalize: bool = True) -> DenseMatrix:
    """
    i.i.d. normal entries. With normalize the draws are scaled by 1/sqrt(d): rows have unit norm
    in expectation and columns carry m/d of the energy, the same as a partial DCT of that shape.
    """
    if m < 1 or d < 1:
        raise BdrParameterError(f'Matrix dimensions must be positive, got {m}x{d}')
    A = np.random.default_rng(seed).standard_normal((m, d))
    if normalize:
        A /= math.sqrt(d)
    return A


def pdct_matrix(m: int, d: int, seed: int) -> DenseMatrix:
    """m distinct rows of the DCT matrix, drawn without replacement"""
    if m < 1 or d < 1:
        raise BdrParameterError(f'Matrix dimensions must be positive, got {m}x{d}')
    if m > d:
        raise BdrParameterError(f'Partial DCT needs m <= d, got {m}x{d}')
    rows = np.random.default_rng(seed).choice(d, size=m, replace=False)
    return _dct_entries(rows, np.arange(d), d)


def sparse_ground_truth(d: int, s: int, seed: int) -> DenseVector:
    """s-sparse vector with a uniform random support and standard normal values"""
    if not 1 <= s <= d:
        raise BdrParameterError(f'Sparsity must satisfy 1 <= s <= d, got s={s}, d={d}')
    rng = np.random.default_rng(seed)
    support = rng.choice(d, size=s, replace=False)
    x = np.zeros(d)
    x[support] = rng.standard_normal(s)
    return x


def make_measurements(A: DenseMatrix, x_g: DenseVector, sigma: float = DEFAULT_NOISE_SIGMA,
                      seed: int = 0) -> DenseVector:
    """b = A x_g + sigma z with z standard normal in measurement space"""
    if A.shape[1] != x_g.shape[0]:
        raise BdrDimensionError(f'A is {A.shape[0]}x{A.shape[1]} but x_g has length {x_g.shape[0]}')
    if sigma < 0:
        raise BdrParameterError(f'sigma must be nonnegative, got {sigma}')
    noise = np.random.default_rng(seed).standard_normal(A.shape[0])
    return A @ x_g + sigma * noise


@dataclass(frozen=True)
class CsInstance:
    """Data (A, b, lam) of one recovery problem plus whatever ground truth is known"""
    A: DenseMatrix
    b: DenseVector
    lam: float
    seed: int
    kind: InstanceKind
    ground_truth: Optional[DenseVector] = None
    signal: Optional[DenseVector] = field(default=None, repr=False)
    mask: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.b.shape != (self.A.shape[0],):
            raise BdrDimensionError(f'b has length {self.b.shape[0]} but A has {self.A.shape[0]} rows')
        if self.ground_truth is not None and self.ground_truth.shape != (self.A.shape[1],):
            raise BdrDimensionError('ground_truth length must equal the number of columns of A')
        if not self.lam > 0:
            raise BdrParameterError(f'lambda must be positive, got {self.lam}')

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def to_problem(self, ell: Optional[float] = None) -> CsProblem:
        return CsProblem(self.A, self.b, self.lam, ell=ell)

    def recover_signal(self, x: DenseVector) -> DenseVector:
        """Signal Psi x from DCT coefficients x"""
        return apply_idct(x, self.d)


def make_cs_instance(kind: InstanceKind, m: int, d: int, s: int, lam: float = DEFAULT_LAMBDA,
                     seed: int = 0, sigma: float = DEFAULT_NOISE_SIGMA) -> CsInstance:
    """Sensing matrix, sparse ground truth and noisy measurements from one seed"""
    kind = InstanceKind(kind)
    if kind == InstanceKind.GAUSSIAN:
        A = gaussian_matrix(m, d, derive_seed(seed, 1))
    elif kind == InstanceKind.PDCT:
        A = pdct_matrix(m, d, derive_seed(seed, 1))
    else:
        raise BdrParameterError(f'{kind.value} instances are not built from (m, d, s)')
    x_g = sparse_ground_truth(d, s, derive_seed(seed, 2))
    b = make_measurements(A, x_g, sigma, derive_seed(seed, 3))
    return CsInstance(A=A, b=b, lam=lam, seed=seed, kind=kind, ground_truth=x_g)


def make_case_instance(case_id: int, seed: int, scale: float = 1.0, lam: float = DEFAULT_LAMBDA,
                       sigma: float = DEFAULT_NOISE_SIGMA) -> CsInstance:
    m, d, s = case_dims(case_id, scale)
    return make_cs_instance(case_kind(case_id), m, d, s, lam, seed, sigma)


def make_signal_instance(signal: DenseVector, m: int, lam: float = DEFAULT_LAMBDA, seed: int = 0,
                         sigma: float = DEFAULT_NOISE_SIGMA) -> CsInstance:
    """Gaussian sensing of the DCT coefficients of a signal window"""
    u = as_vector(signal, 'signal')
    x_g = apply_dct(u)
    A = gaussian_matrix(m, u.shape[0], derive_seed(seed, 1))
    b = make_measurements(A, x_g, sigma, derive_seed(seed, 3))
    return CsInstance(A=A, b=b, lam=lam, seed=seed, kind=InstanceKind.SIGNAL, ground_truth=x_g, signal=u)


@dataclass(frozen=True)
class ReconstructionSpec:
    """Which noisy entries of a signal are observed"""
    signal: DenseVector
    mask: np.ndarray
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    sampling_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        d = self.signal.shape[0]
        mask = np.asarray(self.mask)
        if not 0 < self.sampling_rate <= 1:
            raise BdrParameterError(f'sampling_rate must lie in (0, 1], got {self.sampling_rate}')
        if mask.size and (mask.min() < 0 or mask.max() >= d):
            raise BdrParameterError('mask indices must lie in [0, d)')
        if mask.size and np.any(np.diff(mask) <= 0):
            raise BdrParameterError('mask indices must be sorted and unique')
        if mask.size != int(round(self.sampling_rate * d)):
            raise BdrParameterError(f'mask has {mask.size} entries, expected round({self.sampling_rate} * {d})')
        if self.noise_sigma < 0:
            raise BdrParameterError(f'noise_sigma must be nonnegative, got {self.noise_sigma}')

    @classmethod
    def sample(cls, signal: DenseVector, sampling_rate: float, seed: int,
               noise_sigma: float = DEFAULT_NOISE_SIGMA) -> 'ReconstructionSpec':
        """Observe round(rate * d) entries chosen uniformly at random"""
        signal = as_vector(signal, 'signal')
        d = signal.shape[0]
        count = int(round(sampling_rate * d))
        mask = np.sort(np.random.default_rng(derive_seed(seed, 1)).choice(d, size=count, replace=False))
        return cls(signal=signal, mask=mask, noise_sigma=noise_sigma, sampling_rate=sampling_rate,
                   seed=derive_seed(seed, 2))


def selection_matrix(mask: Sequence[int], d: int) -> DenseMatrix:
    """S with S[i, mask[i]] = 1"""
    mask = np.asarray(mask, dtype=np.int64)
    S = np.zeros((mask.size, d))
    S[np.arange(mask.size), mask] = 1.0
    return S


def make_reconstruction_instance(spec: ReconstructionSpec, lam: float = DEFAULT_LAMBDA) -> CsInstance:
    """A = S Psi with Psi the inverse DCT; b = observed entries of the noisy signal"""
    mask = np.asarray(spec.mask, dtype=np.int64)
    if mask.size == 0:
        raise BdrParameterError('Reconstruction needs at least one observed entry')
    u = spec.signal
    d = u.shape[0]
    # rows of Psi = D^T are columns of D
    A = _dct_entries(np.arange(d), mask, d).T
    noisy = u + spec.noise_sigma * np.random.default_rng(spec.seed).standard_normal(d)
    return CsInstance(A=A, b=noisy[mask], lam=lam, seed=spec.seed, kind=InstanceKind.RECONSTRUCTION,
                      ground_truth=apply_dct(u), signal=u, mask=mask)


def synthetic_signal(kind: SignalKind, d: int, seed: int) -> DenseVector:
    """
    Seeded signals that are sparse under the DCT.

    smooth_sinusoid: a voltage-like waveform, a fundamental at a non-integer number of cycles per
    window plus weaker 3rd and 5th harmonics with random phases. Harmonics at or above the Nyquist
    rate are dropped. piecewise_load: base load, trend, daily cycle and kinks.
    """
    kind = SignalKind(kind)
    if d < 8:
        raise BdrParameterError(f'Synthetic signals need d >= 8, got {d}')
    rng = np.random.default_rng(seed)
    t = np.arange(d, dtype=np.float64)
    if kind == SignalKind.SMOOTH_SINUSOID:
        cycles = rng.uniform(1.5, max(2.5, d / 40.0))
        amplitudes = (1.0, rng.uniform(0.05, 0.2), rng.uniform(0.02, 0.1))
        phases = rng.uniform(0, 2 * np.pi, size=3)
        signal = np.zeros(d)
        for harmonic, amplitude, phase in zip((1, 3, 5), amplitudes, phases):
            if harmonic * cycles < d / 2.0:
                signal += amplitude * np.cos(2 * np.pi * harmonic * cycles * t / d + phase)
        return signal

    # 96 samples per day at a 15 minute step
    period = 96.0
    base = rng.uniform(4.0, 6.0)
    trend = rng.uniform(-1.0, 1.0) * t / d
    phases = rng.uniform(0, 2 * np.pi, size=2)
    daily = (0.8 * np.sin(2 * np.pi * t / period + phases[0])
             + 0.3 * np.sin(4 * np.pi * t / period + phases[1]))
    kinks = np.zeros(d)
    for knot, slope in zip(rng.uniform(0, d, size=3), rng.uniform(-0.5, 0.5, size=3)):
        kinks += slope * np.abs(t - knot) / d
    return base + trend + daily + kinks


def load_signal_csv(path: PathLike) -> DenseVector:
    """One real per line, optional single header line, blank lines ignored"""
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False,
                            encoding='utf-8')
    except pd.errors.EmptyDataError as exc:
        raise BdrSignalFileError(f'{path}: signal file is empty') from exc
    except pd.errors.ParserError as exc:
        match = _PARSER_LINE.search(str(exc))
        line = int(match.group(1)) if match else None
        where = f'{path}:{line}' if line else str(path)
        raise BdrSignalFileError(f'{where}: expected one value per line', line=line) from exc
    except OSError as exc:
        raise BdrSignalFileError(f'{path}: {exc}') from exc

    frame = frame.fillna('')
    values = []
    header_allowed = True
    for idx, row in frame.iterrows():
        line = idx + 1
        text = row.iloc[0].strip()
        if any(str(extra).strip() for extra in row.iloc[1:]):
            raise BdrSignalFileError(f'{path}:{line}: expected one value per line', line=line)
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            if header_allowed:
                header_allowed = False
                continue
            raise BdrSignalFileError(f'{path}:{line}: cannot parse {text!r} as a number', line=line)
        header_allowed = False
        if not math.isfinite(value):
            raise BdrSignalFileError(f'{path}:{line}: non-finite value {text!r}', line=line)
        values.append(value)
    if not values:
        raise BdrSignalFileError(f'{path}: signal file has no values')
    _LOGGER.debug('Loaded %d samples from %s', len(values), path)
    return np.array(values, dtype=np.float64)


def write_signal_csv(path: PathLike, signal: DenseVector, header: Optional[str] = 'value'):
    """Counterpart of load_signal_csv with 17 significant digits"""
    frame = pd.DataFrame({header or 'value': as_vector(signal, 'signal')})
    frame.to_csv(path, index=False, header=header is not None, float_format='%.17g', lineterminator='\n')


def dump_instance(instance: CsInstance, path: PathLike):
    """
    Text dump: '# key: value' header lines, then A (row-major), b and the ground truth,
    one 17-significant-digit value per line.
    """
    header = {
        'kind': instance.kind.value,
        'm': instance.m,
        'd': instance.d,
        'lam': repr(instance.lam),
        'seed': instance.seed,
        'has_ground_truth': int(instance.ground_truth is not None),
    }
    blocks = [instance.A.ravel(), instance.b]
    if instance.ground_truth is not None:
        blocks.append(instance.ground_truth)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(DUMP_MAGIC + '\n')
        for key, value in header.items():
            handle.write(f'# {key}: {value}\n')
        np.savetxt(handle, np.concatenate(blocks), fmt='%.17g')


def load_instance(path: PathLike) -> CsInstance:
    header = {}  # type: Dict[str, str]
    with open(path, encoding='utf-8') as handle:
        if handle.readline().rstrip('\r\n') != DUMP_MAGIC:
            raise BdrParameterError(f'{path} is not a bdrsplit instance dump')
        for line in handle:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].partition(':')
            header[key.strip()] = value.strip()
    try:
        m, d = int(header['m']), int(header['d'])
        data = np.loadtxt(path, comments='#', dtype=np.float64, ndmin=1)
        has_truth = header.get('has_ground_truth') == '1'
        expected = m * d + m + (d if has_truth else 0)
        if data.size != expected:
            raise BdrDimensionError(f'{path}: expected {expected} values, found {data.size}')
        return CsInstance(
            A=as_matrix(data[:m * d].reshape(m, d), 'A'),
            b=data[m * d:m * d + m],
            lam=float(header['lam']),
            seed=int(header['seed']),
            kind=InstanceKind(header['kind']),
            ground_truth=data[m * d + m:] if has_truth else None,
        )
    except (KeyError, ValueError) as exc:
        raise BdrParameterError(f'{path}: malformed instance dump ({exc})') from exc
