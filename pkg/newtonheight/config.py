# Configuration File for newtonheight Parameters

import json
import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "NEWTONHEIGHT_CONFIG"

# Exact core
MAX_DEGREE = 64  # Total degree guard for parsed and sheared polynomials
MAX_STEPS = 64  # Varchenko steps before giving up
MAX_LINEAR_STEPS = 8  # Degree-one shears tried by linear normalization
ROOT_ISOLATION_WIDTH = "1/4294967296"  # 2^-32, width of real-root isolating intervals
SERIES_ORDER = 64  # Truncation order of the critical-curve series in the classifier

# Oscillatory integrals
GAUSS_ORDER = 8  # Gauss-Legendre nodes per panel and axis
OVERSAMPLE = 1.25  # Panel oversampling against the local oscillation period
MIN_PANELS = 16  # Panels per axis even for slowly varying phases
NODE_BUDGET = 2**28  # Node evaluations allowed per integral (refinement level included)
CUTOFF_RADIUS = 0.5  # Radius of the smooth bump cutoff
LAMBDA_MIN_EXP = 6  # Default decay grid is 2^6 .. 2^13
LAMBDA_MAX_EXP = 13
S_RADIUS = 0.1  # Perturbation radius for the uniform decay check
S_SAMPLES = 25
THREADS = 4

# Sublevel sets
SUBLEVEL_GRID = 4096  # Cells per axis of the counting grid
REFINE_FACTOR = 8  # Sub-samples per axis in boundary cells
MC_SAMPLES = 2**20  # Monte-Carlo fallback sample count
SUBLEVEL_BUDGET = 2**26  # Grid cells allowed before falling back to Monte-Carlo
EPS_MIN_EXP = -20  # Default epsilon grid is 2^-20 .. 2^-4
EPS_MAX_EXP = -4
KNAPP_SAMPLES = 10**6
KNAPP_UNIT_SCALE = 0.5  # Half-width used for a zero weight component
TREND_TOLERANCE = 0.02  # Shell-sum slope band treated as inconclusive

# Tolerances for verification summaries
DECAY_TOLERANCE = 0.05
SUBLEVEL_TOLERANCE = 0.03

# Reproducibility
SEED = 7
SCHEMA_VERSION = "1.0"

# Logging Configuration
LOGGING_LEVEL = "INFO"  # Log verbosity level

DEFAULTS = {
    "max_degree": MAX_DEGREE,
    "max_steps": MAX_STEPS,
    "max_linear_steps": MAX_LINEAR_STEPS,
    "series_order": SERIES_ORDER,
    "gauss_order": GAUSS_ORDER,
    "oversample": OVERSAMPLE,
    "min_panels": MIN_PANELS,
    "budget": NODE_BUDGET,
    "cutoff_radius": CUTOFF_RADIUS,
    "lambda_min": 2.0**LAMBDA_MIN_EXP,
    "lambda_max": 2.0**LAMBDA_MAX_EXP,
    "s_radius": S_RADIUS,
    "s_samples": S_SAMPLES,
    "threads": THREADS,
    "sublevel_grid": SUBLEVEL_GRID,
    "refine_factor": REFINE_FACTOR,
    "mc_samples": MC_SAMPLES,
    "sublevel_budget": SUBLEVEL_BUDGET,
    "eps_min": 2.0**EPS_MIN_EXP,
    "eps_max": 2.0**EPS_MAX_EXP,
    "knapp_samples": KNAPP_SAMPLES,
    "knapp_unit_scale": KNAPP_UNIT_SCALE,
    "trend_tolerance": TREND_TOLERANCE,
    "decay_tolerance": DECAY_TOLERANCE,
    "sublevel_tolerance": SUBLEVEL_TOLERANCE,
    "seed": SEED,
    "logging_level": LOGGING_LEVEL,
}


def _read(path):
    with open(path, "rb") as config_file:
        if path.endswith(".json"):
            return json.load(config_file)
        return tomllib.load(config_file)


def load_config(path=None):
    """
    Load run parameters, merging a config file over ``DEFAULTS``.

    The file is TOML-style ``key = value`` lines or JSON (by ``.json`` suffix). A missing
    or malformed file is logged and the defaults are used.

    :param path: Config file path; falls back to the ``NEWTONHEIGHT_CONFIG`` environment variable.
    :return: A fresh dict of parameters.
    """
    config = dict(DEFAULTS)
    path = path or os.getenv(CONFIG_ENV_VAR)
    if not path:
        return config

    try:
        loaded = _read(path)
        logger.info(f"Configuration loaded from {path}")
    except FileNotFoundError:
        logger.error(f"Configuration file not found at {path}. Using defaults.")
        return config
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        logger.error(f"Error decoding configuration file: {e}. Using defaults.")
        return config

    for key, value in loaded.items():
        if key not in DEFAULTS:
            logger.warning(f"Ignoring unknown configuration key '{key}'")
            continue
        config[key] = value
    return config
