"""Adaptive process-noise estimation for Kalman filters."""

from ._core import (
    ConfigError,
    combine_q_sqrt,
    dmc_coefficients,
    dmc_q,
    run_campaign,
    scenario_json,
    scenario_names,
    snc_q,
    unvech,
    vech,
)

__all__ = [
    "ConfigError",
    "combine_q_sqrt",
    "dmc_coefficients",
    "dmc_q",
    "run_campaign",
    "scenario_json",
    "scenario_names",
    "snc_q",
    "unvech",
    "vech",
]
