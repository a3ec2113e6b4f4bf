import os

import numpy as np
import pytest

from bdrsplit.generators import make_case_instance
from bdrsplit.problem import CsProblem

TINY_B = [1.0, -0.2]
TINY_LAMBDA = 0.5


@pytest.fixture
def rng():
    """Seeded generator so every test sees the same draws."""
    return np.random.default_rng(20240917)


@pytest.fixture
def tiny_lasso():
    """A = I_2, b = [1, -0.2], lam = 0.5 with g switched off; minimizer [0.5, 0]."""
    return CsProblem(np.eye(2), TINY_B, TINY_LAMBDA, g_weight=0.0)


@pytest.fixture
def tiny_cs2():
    """Same data with the l1 - l2 penalty; global minimizer [1, 0] with objective 0.02."""
    return CsProblem(np.eye(2), TINY_B, TINY_LAMBDA)


@pytest.fixture
def small_instance():
    """Case 1 scaled by 0.1: 36 x 128 Gaussian sensing, 4 nonzeros."""
    return make_case_instance(1, seed=11, scale=0.1)


@pytest.fixture
def small_problem(small_instance):
    return small_instance.to_problem()


@pytest.fixture
def full_scale():
    """Full-scale reproduction runs, enabled through BDRSPLIT_FULL_SCALE_TESTS."""
    if not os.getenv("BDRSPLIT_FULL_SCALE_TESTS"):
        pytest.skip("BDRSPLIT_FULL_SCALE_TESTS environment variable unset")
    return True
