"""Various constants"""

# Solver defaults (sparse recovery protocol)
DEFAULT_LAMBDA = 0.1
DEFAULT_TAU = 20.0
DEFAULT_NU = 1.4
DEFAULT_RHO = 0.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 3000
DEFAULT_RUNS = 30
GAMMA_BAR_MARGIN = 1e-10  # theory mode uses gamma_bar - margin
GAMMA_WHEN_UNBOUNDED = 1.0  # theory mode step when ell == 0

# Step-size heuristic for reconstruction runs
DEFAULT_GAMMA0 = 0.447
DEFAULT_K_FACTOR = 10.0
HEURISTIC_SHRINK = 0.9999
HEURISTIC_STEP_SCALE = 1000.0
HEURISTIC_NORM_BOUND = 1e10

# Numerical guards
EPS_GUARD = 1e-300
DIVERGENCE_BOUND = 1e12
CONJUGATE_DOMAIN_TOL = 1e-9

# Power iteration
POWER_ITERS = 1000
POWER_TOL = 1e-10
POWER_START_SEED = 20240917

# Data generation
DEFAULT_NOISE_SIGMA = 1e-3
DEFAULT_SAMPLING_RATE = 0.4

# Baseline DCA with extrapolation
PDCA_RESTART_EVERY = 200

# Sensing test cases: case id -> (m, d, s)
GAUSSIAN_CASES = {
    1: (360, 1280, 40),
    2: (720, 2560, 80),
    3: (1080, 3840, 120),
    4: (1440, 5120, 160),
    5: (1800, 6400, 200),
    6: (2160, 7680, 240),
    7: (2520, 8960, 280),
    8: (2880, 10240, 320),
    9: (3240, 11520, 360),
    10: (3600, 12800, 400),
}
PDCT_CASES = {
    11: (360, 1280, 40),
    12: (4320, 2560, 80),
    13: (4680, 3840, 120),
    14: (5040, 5120, 160),
    15: (5400, 6400, 200),
    16: (5760, 7680, 240),
    17: (6120, 8960, 280),
    18: (6480, 10240, 320),
    19: (6840, 11520, 360),
    20: (7200, 12800, 400),
}
TEST_CASES = {**GAUSSIAN_CASES, **PDCT_CASES}

# Reconstruction grid: case id -> (signal length, sampling rate)
RECONSTRUCTION_CASES = {
    1: (2000, 0.2),
    2: (2000, 0.3),
    3: (2000, 0.4),
    4: (5000, 0.2),
    5: (5000, 0.3),
    6: (5000, 0.4),
    7: (10000, 0.2),
    8: (10000, 0.3),
    9: (10000, 0.4),
}
