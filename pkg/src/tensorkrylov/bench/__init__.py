"""Synthetic generators, experiment runner and command line."""

from .experiment import (
    COLUMNS,
    ExperimentSpec,
    max_principal_angle,
    parse_schedule,
    read_csv,
    run_experiment,
    win_fraction,
    write_csv,
)
from .generators import gen_gaussian, gen_low_rank, gen_sparse

__all__ = [
    "COLUMNS",
    "ExperimentSpec",
    "gen_gaussian",
    "gen_low_rank",
    "gen_sparse",
    "max_principal_angle",
    "parse_schedule",
    "read_csv",
    "run_experiment",
    "win_fraction",
    "write_csv",
]
