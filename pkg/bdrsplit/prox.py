"""
Closed-form proximal maps for the sparse recovery family

The l1 prox is soft shrinkage, the l2-norm prox is block shrinkage, the dual update of
g = lam * ||.|| follows from Moreau's decomposition, and the least-squares prox is a
cached Cholesky solve.
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg

from .const import POWER_ITERS, POWER_START_SEED, POWER_TOL
from .core import DenseMatrix, DenseVector, as_matrix, as_vector
from .exc import BdrDimensionError, BdrParameterError, BdrStaleCacheError

_LOGGER = logging.getLogger(__name__)

ROUTE_DIRECT = 'direct'
ROUTE_WOODBURY = 'woodbury'


def _check_kappa(kappa: float):
    if kappa < 0:
        raise BdrParameterError(f'Threshold must be nonnegative, got {kappa}')


def soft_threshold(v: DenseVector, kappa: float) -> DenseVector:
    """Prox of kappa * ||.||_1: sign(v) * max(|v| - kappa, 0)"""
    _check_kappa(kappa)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def prox_l2_norm(v: DenseVector, kappa: float) -> DenseVector:
    """Prox of kappa * ||.||: shrink v towards the origin by kappa, or return 0 inside the ball"""
    _check_kappa(kappa)
    norm = np.linalg.norm(v)
    if norm <= kappa:
        return np.zeros_like(v)
    return v - kappa * v / norm


def w_update(w: DenseVector, z: DenseVector, tau: float, lam: float) -> DenseVector:
    """
    Dual step for g = lam * ||.||: min{lam / ||tau w + z||, 1 / tau} (tau w + z).

    Returns 0 when tau w + z = 0 (lam / 0 read as +inf).
    """
    if tau <= 0:
        raise BdrParameterError(f'tau must be positive, got {tau}')
    if lam <= 0:
        raise BdrParameterError(f'lambda must be positive, got {lam}')
    v = tau * w + z
    norm = np.linalg.norm(v)
    if norm == 0:
        return np.zeros_like(v)
    return min(lam / norm, 1.0 / tau) * v


class QuadraticProxCache:
    """
    Factorization behind the prox of f = 1/2 ||Ax - b||^2 for one gamma.

    The direct route factors (A^T A + I/gamma) (d x d); the Woodbury route factors
    (I_m + gamma A A^T) (m x m). With route=None the smaller system is chosen.
    """

    def __init__(self, A: DenseMatrix, b: DenseVector, gamma: float, route: Optional[str] = None):
        if not gamma > 0:
            raise BdrParameterError(f'gamma must be positive, got {gamma}')
        self.A = as_matrix(A, 'A')
        self.b = as_vector(b, 'b')
        m, d = self.A.shape
        if self.b.shape != (m,):
            raise BdrDimensionError(f'b has length {self.b.shape[0]} but A has {m} rows')
        if route is None:
            route = ROUTE_WOODBURY if m < d else ROUTE_DIRECT
        if route not in (ROUTE_DIRECT, ROUTE_WOODBURY):
            raise BdrParameterError(f'Unknown factorization route {route!r}')
        self.gamma = gamma
        self.route = route
        self._atb = self.A.T @ self.b
        if route == ROUTE_DIRECT:
            system = self.A.T @ self.A + np.eye(d) / gamma
        else:
            system = np.eye(m) + gamma * (self.A @ self.A.T)
        self._factor = linalg.cho_factor(system)
        _LOGGER.debug('Factorized %s system of size %d for gamma=%r', route, system.shape[0], gamma)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def solve(self, y: DenseVector) -> DenseVector:
        """(A^T A + I/gamma)^{-1} (A^T b + y/gamma)"""
        if self.route == ROUTE_DIRECT:
            return linalg.cho_solve(self._factor, self._atb + y / self.gamma)
        u = self.gamma * self._atb + y
        return u - self.gamma * (self.A.T @ linalg.cho_solve(self._factor, self.A @ u))


def prox_quadratic(cache: QuadraticProxCache, y: DenseVector, gamma: float) -> DenseVector:
    """Minimizer of 1/2 ||Ax - b||^2 + 1/(2 gamma) ||x - y||^2"""
    if gamma != cache.gamma:
        raise BdrStaleCacheError(f'Cache holds gamma={cache.gamma!r}, called with gamma={gamma!r}')
    if y.shape != (cache.dim,):
        raise BdrDimensionError(f'y has shape {y.shape}, expected ({cache.dim},)')
    return cache.solve(y)


def power_iteration_ell(A: DenseMatrix, iters: int = POWER_ITERS, tol: float = POWER_TOL) -> float:
    """
    Largest eigenvalue of A^T A by power iteration.

    The start vector is a fixed-seed Gaussian draw rather than all ones: the constant vector is
    orthogonal to every DCT row but the first, so it would miss partial-DCT spectra entirely.
    """
    if iters < 1:
        raise BdrParameterError(f'iters must be at least 1, got {iters}')
    A = np.asarray(A, dtype=np.float64)
    v = np.random.default_rng(POWER_START_SEED).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for k in range(iters):
        av = A @ v
        rayleigh = float(av @ av)
        if rayleigh == 0.0:
            return 0.0
        w = A.T @ av
        v = w / np.linalg.norm(w)
        if k and abs(rayleigh - estimate) <= tol * rayleigh:
            estimate = rayleigh
            break
        estimate = rayleigh
    av = A @ v
    return float(max(estimate, av @ av))
