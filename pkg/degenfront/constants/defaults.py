"""
Vocabularies and default numerical settings shared across the pipeline
"""

from enum import Enum


class Orientation(str, Enum):
    INCREASING = "increasing_0_to_1"
    DECREASING = "decreasing_1_to_0"


class SpeedSign(str, Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"


class Subcommand(str, Enum):
    FRONT = "front"
    SPECTRUM = "spectrum"
    EVOLVE = "evolve"
    SWEEP = "sweep"
    CHECK = "check"
    REPORT = "report"


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"


class ExitCode(int, Enum):
    OK = 0
    CHECK_FAILURE = 1
    CONFIG_ERROR = 2
    NUMERICAL_FAILURE = 3


# Kinetics
BALANCE_TOL = 1e-12  # |D(1)| at or below this declares zero speed
ROOT_TOL = 1e-12  # f(0), f(alpha), f(1) must vanish to this
QUADRATURE_ABS_TOL = 1e-12
MAX_POLY_DEGREE = 12
HYPOTHESIS_MIN_SAMPLES = 100

# Profile
DEFAULT_PHI_AT_ZERO = 0.5
DEFAULT_LEFT_TOL = 1e-8
DEFAULT_RIGHT_PAD = 1.0
DEFAULT_N_NODES = 4001
INTEGRATOR_RTOL = 1e-10
INTEGRATOR_ATOL = 1e-12
SERIES_CUTOFF = 1e-12  # below this sqrt(phi) the endpoint limit is used
RATE_AGREEMENT = 0.02

# Spectrum
ZERO_TOL_FLOOR = 5e-3
BETA_MARGIN = 0.9
UNSTABLE_TOL = 1e-2
BORDER_SLACK = 0.05
LEFT_WINDOW = 2.0  # width of the far-left window for sigma_pi localization
PARTICIPATION_DELOCALIZED = 0.2
DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3, 1e-4)

# Semigroup
DEFAULT_T_BURN = 1.0
DEFAULT_DT = 0.05
DECAY_E_FOLDINGS = 30.0
NORM_FLOOR = 1e-14
MIN_FIT_SAMPLES = 20
RESOLVENT_SLACK = 0.05

# Evolution
RANGE_GUARD = 0.05
RANGE_ABORT = 0.5
MAX_PERTURBATION = 0.2
SHIFT_BRACKET = (-2.0, 2.0)
SHIFT_XTOL = 1e-6
ADVISORY_BAND = 0.25

# Artifacts
PROFILE_SCHEMA_VERSION = 1
PROFILE_COLUMNS = ("x", "phi", "phi_x", "phi_xx")
FLOAT_FORMAT = "%.17g"
