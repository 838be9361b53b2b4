# Configuration constants for the tanpq laboratory

import os
import logging
from dotenv import load_dotenv

load_dotenv(
    os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "..", "..", ".env")
)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Orbit budget defaults
orbit_defaults = {
    "max_iter": 2000,
    "warmup": 500,
    "max_period": 64,
    "cycle_tol": 1e-9,
    "attract_tol": 1e-12,
    "zero_tol": 1e-10,
    "pole_tol": 1e-12,
}

# Budget used where parameters sit close to a neutral cycle (boundary and bud checks)
deep_orbit_defaults = dict(orbit_defaults, max_iter=200000, warmup=20000)

MAX_MODULUS = 1e8  # |z| above this aborts evaluation
TRACT_GUARD = 30.0  # |Im s| above this switches s/sin(s) to the exponential expansion
SYMMETRIC_CYCLE_TOL = 1e-6  # -C == C test for pq odd
AXIS_ALIGN_TOL = 1e-12  # angular slack for orbits kept on the lines where z^q is real or imaginary

# Acceptance of a detected cycle
CYCLE_AMPLIFICATION_LIMIT = 1e6  # worst growth of a relative error along part of the cycle
MULTIPLIER_ERROR_LIMIT = 1e-10  # estimated relative error of a representable multiplier
MULTIPLIER_AGREEMENT = 1e-9  # closed form against chain rule, in log modulus and phase
ORBIT_KICK = 1e-9  # relative nudge applied before rescanning a rejected cycle
ORBIT_KICKS = 2

# Newton settings
refine_max_steps = 50
polish_max_steps = 4
center_max_steps = 60
center_fd_factor = 1e-7
center_residual_tol = 1e-10
center_dedup_radius = 1e-8
wrong_order_radius = 1e-6
MAX_CENTER_ORDER = 5

# Rendering
MAX_WINDOW_CELLS = 10**8
MIN_CIRCLE_SAMPLES = 360
DEFAULT_CIRCLE_SAMPLES = 720
DEFAULT_RESOLUTION = 800

colormap = {
    "capture": (0, 160, 0),
    "shell": {1: (255, 215, 0), 2: (0, 200, 200)},
    "virtual": (255, 255, 255),
    "undecided": (0, 0, 0),
}
GOLDEN_ANGLE_DEG = 137.50776
HUE_START_DEG = 180.0
HUE_SATURATION = 0.85
HUE_VALUE = 0.95

# Verification suites
MAX_PQ = 8
DEFAULT_SEED = int(os.getenv("TANPQ_SEED", "1729"))
symmetry_annulus = (0.2, 6.0)
boundary_perturbation = 1e-3
ray_flank_offset = 0.05

# Exit codes of the command line
exit_codes = {
    "ok": 0,
    "usage": 1,
    "io": 2,
    "failed": 3,
    "inconclusive": 4,
}


def env_threads():
    """Worker count from TANPQ_THREADS, or None when unset or malformed."""
    raw = os.getenv("TANPQ_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring TANPQ_THREADS={raw!r}")
        return None
    return value if value > 0 else None


def configure_logging(level=None):
    """Apply the project-wide logging format; level defaults to TANPQ_LOG_LEVEL."""
    level = level or os.getenv("TANPQ_LOG_LEVEL", "INFO")
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO), format=LOG_FORMAT)
