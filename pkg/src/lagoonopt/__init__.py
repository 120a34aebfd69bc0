"""Optimal day-ahead operation of an ebb-generation tidal lagoon."""

from lagoonopt.core import (
    ConfigError,
    InfeasibleError,
    LagoonConfig,
    Mode,
    Objective,
    PriceSeries,
    Schedule,
    SolverResult,
    TideSeries,
    evaluate_objective,
    swansea_config,
    validate_config,
)
from lagoonopt.dp import DpParams, enumerate_exhaustive, optimize

__all__ = [
    "ConfigError",
    "DpParams",
    "InfeasibleError",
    "LagoonConfig",
    "Mode",
    "Objective",
    "PriceSeries",
    "Schedule",
    "SolverResult",
    "TideSeries",
    "enumerate_exhaustive",
    "evaluate_objective",
    "optimize",
    "swansea_config",
    "validate_config",
]
