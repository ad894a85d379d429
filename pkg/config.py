import logging
import os

# Ball arithmetic
RADIUS_BITS = 30
GUARD_BITS = 20

# Siegel reduction
REDUCTION_TOL = 2.0 ** -16
REDUCTION_START_PREC = 64
REDUCTION_MAX_FACTOR = 16
LLL_DELTA = 0.99

# Ellipsoids and summation
ELLIPSOID_PREC = 32
MIN_TERM_PREC = 8

# Quasi-linear algorithm
SPLIT_THRESHOLD = 10.0
AUX_FAILURES_PER_LEVEL = 5
AUX_MAX_ESCALATIONS = 8
AMBIGUOUS_RETRIES = 2
LOWPREC_BITS = 64
AUX_SEED = 2024
QL_STEP_BITS = 6
QL_EASY_BITS = 8
QL_EARLY_SWITCH = True
QL_AUTO_SPLIT = False

# Numeric matching of character actions
MATCH_PREC = 96
MATCH_TOL_BITS = 40

DEFAULT_PREC = 64

LOG_ENV = "THETA_LOG"
LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}

_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter('%(levelname)s:%(name)s: %(message)s',))


def get_logger(name: str) -> logging.Logger:
    """Named logger under the `theta` namespace; level taken from THETA_LOG."""
    root = logging.getLogger("theta")
    if not root.handlers:
        root.handlers = [_handler]
        root.setLevel(LOG_LEVELS.get(os.environ.get(LOG_ENV, "warning").lower(), logging.WARNING))
        root.propagate = False
    return logging.getLogger(f"theta.{name}")
