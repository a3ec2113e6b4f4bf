"""Least-squares sparse recovery problems: 1/2 ||Ax - b||^2 + lam ||x||_1 - g_weight ||x||"""

import logging
import math
from typing import Optional

import numpy as np

from .const import CONJUGATE_DOMAIN_TOL
from .core import DenseMatrix, DenseVector, SplittingProblem, as_matrix, as_vector
from .exc import BdrDimensionError, BdrParameterError
from .prox import (
    QuadraticProxCache,
    power_iteration_ell,
    prox_l2_norm,
    prox_quadratic,
    soft_threshold,
    w_update,
)

_LOGGER = logging.getLogger(__name__)


class CsProblem(SplittingProblem):
    """
    Compressed sensing objective split as f = 1/2 ||Ax - b||^2, h = lam ||.||_1, g = g_weight ||.||.

    g_weight defaults to lam (the l1 - l2 model); g_weight = 0 gives the lasso.
    """

    def __init__(
            self,
            A: DenseMatrix,
            b: DenseVector,
            lam: float,
            g_weight: Optional[float] = None,
            ell: Optional[float] = None):
        self.A = as_matrix(A, 'A')
        self.b = as_vector(b, 'b')
        if self.b.shape != (self.A.shape[0],):
            raise BdrDimensionError(f'b has length {self.b.shape[0]} but A has {self.A.shape[0]} rows')
        if lam < 0:
            raise BdrParameterError(f'lambda must be nonnegative, got {lam}')
        self.lam = float(lam)
        self.g_weight = self.lam if g_weight is None else float(g_weight)
        if self.g_weight < 0:
            raise BdrParameterError(f'g_weight must be nonnegative, got {self.g_weight}')
        self._ell = ell  # type: Optional[float]
        self._cache = None  # type: Optional[QuadraticProxCache]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def shape(self):
        return self.A.shape

    @property
    def lipschitz_ell(self) -> float:
        """lambda_max(A^T A), estimated once"""
        if self._ell is None:
            self._ell = power_iteration_ell(self.A)
            _LOGGER.debug('Estimated ell=%r for a %dx%d matrix', self._ell, *self.A.shape)
        return self._ell

    def quadratic_cache(self, gamma: float) -> QuadraticProxCache:
        """Factorization for gamma, rebuilt only when gamma changes"""
        cache = self._cache
        if cache is None or cache.gamma != gamma:
            cache = QuadraticProxCache(self.A, self.b, gamma)
            self._cache = cache
        return cache

    def grad_f(self, x: DenseVector) -> DenseVector:
        return self.A.T @ (self.A @ x - self.b)

    def prox_f(self, y: DenseVector, gamma: float) -> DenseVector:
        return prox_quadratic(self.quadratic_cache(gamma), y, gamma)

    def prox_h(self, v: DenseVector, gamma: float) -> DenseVector:
        return soft_threshold(v, gamma * self.lam)

    def prox_g(self, v: DenseVector, kappa: float) -> DenseVector:
        return prox_l2_norm(v, kappa * self.g_weight)

    def dual_update(self, w: DenseVector, z: DenseVector, tau: float) -> DenseVector:
        if self.g_weight == 0:
            # g* is the indicator of {0}
            if tau <= 0:
                raise BdrParameterError(f'tau must be positive, got {tau}')
            return np.zeros_like(w)
        return w_update(w, z, tau, self.g_weight)

    def eval_f(self, x: DenseVector) -> float:
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def eval_h(self, x: DenseVector) -> float:
        return self.lam * float(np.sum(np.abs(x)))

    def eval_g(self, x: DenseVector) -> float:
        return self.g_weight * float(np.linalg.norm(x))

    def eval_g_conj(self, w: DenseVector) -> float:
        """Indicator of the g_weight-ball, with a small tolerance for rounding"""
        if np.linalg.norm(w) <= self.g_weight + CONJUGATE_DOMAIN_TOL:
            return 0.0
        return math.inf

    def subgrad_g(self, x: DenseVector) -> DenseVector:
        norm = np.linalg.norm(x)
        if norm == 0:
            return np.zeros_like(x)
        return self.g_weight * x / norm
