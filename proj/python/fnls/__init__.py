"""Spectral solvers for the trapped fractional NLS with a singular weight."""

import json

from ._fnls import (
    ConfigError,
    GridMismatch,
    ParameterError,
    Problem,
    ThresholdError,
    energy,
    epstein_zeta,
    first_eigenpair,
    frac_laplacian,
    gradient,
    ground_state,
    interaction,
    minimize,
    seminorm_sq,
    verify_gn,
    weinstein_quotient,
)
from ._fnls import run_pipeline as _run_pipeline


def run_pipeline(pipeline, config_text="", assert_mode=False, **overrides):
    """Run a named pipeline; keyword arguments become key=value overrides.

    Returns (exit_code, output_directory, summary_dict).
    """
    sets = [f"pipeline={pipeline}"] + [f"{k}={v}" for k, v in overrides.items()]
    code, directory, summary = _run_pipeline(config_text, sets, assert_mode)
    return code, directory, json.loads(summary)


__all__ = [
    "ConfigError",
    "GridMismatch",
    "ParameterError",
    "Problem",
    "ThresholdError",
    "energy",
    "epstein_zeta",
    "first_eigenpair",
    "frac_laplacian",
    "gradient",
    "ground_state",
    "interaction",
    "minimize",
    "run_pipeline",
    "seminorm_sq",
    "verify_gn",
    "weinstein_quotient",
]
