"""Tempered hybrid ensemble filters for data assimilation."""

from ._core import (
    ConfigError,
    NumericalError,
    ObservationModel,
    RngStream,
    analysis,
    dam_break,
    effective_sample_size,
    hybrid_step,
    integrate,
    quartiles,
    rmse,
    run_config,
    solve_ot,
    table_rows,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "ObservationModel",
    "RngStream",
    "analysis",
    "dam_break",
    "effective_sample_size",
    "hybrid_step",
    "integrate",
    "quartiles",
    "rmse",
    "run_config",
    "solve_ot",
    "table_rows",
]
