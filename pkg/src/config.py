# src/config.py
from __future__ import annotations

import math

from src import __version__

TOOL_NAME = "ratchet-toolkit"
TOOL_VERSION = __version__

# Every Generator in the package is PCG64 seeded through a SeedSequence.
RNG_ALGORITHM = "PCG64"
DEFAULT_SEED = 1
SEED_ENV_VAR = "RATCHET_SEED"

# 1/(e-1): the A=1 prefactor the literature rounds to 0.58.
HAIGH_PREFACTOR = 1.0 / (math.e - 1.0)

# x0(tau) / pi0 when starting from the post-click profile: 1/(1-1/e) ~ 1.6.
PHASE_ONE_END_FACTOR = 1.0 / (1.0 - math.exp(-1.0))


class Tolerances:
    TAIL_MASS = 1e-12
    SUM_TO_ONE = 1e-9
    NEGATIVE_ENTRY = -1e-9
    QUADRATURE_ABS = 1e-11
    QUADRATURE_REL = 1e-10
    QUADRATURE_OUTER_REL = 1e-8


class WindowLimits:
    MAX_CLASSES = 4096
    MAX_CUMULANT_ORDER = 20


class RecorderDefaults:
    HIST_BINS_PER_PI0 = 50
    HIST_SPAN_PI0 = 5.0
    SCATTER_INTERVAL = 10
    FITNESS_INTERVAL = 100
    BURN_IN_HAIGH_MULTIPLE = 100.0


class DiffusionDefaults:
    DT = 0.1
    MAX_DT = 1.0
    Y_MAX_PI0 = 8.0
    REPLICATES = 256
    FV_MAX_HALVINGS = 10
    FV_MAX_CLAMPED_MASS = 1e-3


class ExperimentDefaults:
    N = 10_000
    GENERATIONS = 1_000_000
    MIN_CLICKS_FOR_FIT = 10
    MIN_POINTS_FOR_FIT = 3
    MIN_PHASE_SAMPLES = 1_000
    MIN_DIAGNOSTIC_STEPS = 1_000
    ZERO_CLICK_UPPER = 3.0
    OCCUPATION_BINS_PER_PI0 = 10
    THRESHOLD_COEFFICIENT = 5.0
    THRESHOLD_UPPER = 1e300


# CSV floats are written with 17 significant digits.
CSV_FLOAT_FORMAT = "%.17g"
