"""Experiment runner, config parsing and the command-line interface."""
from .config import PRESETS, REGISTRY, ConfigError, ExperimentConfig, load_config
from .runner import (
    BudgetParityError,
    MismatchLeakError,
    RunRecord,
    SummaryRow,
    run_experiment,
    summarize,
)

__all__ = [
    "BudgetParityError", "ConfigError", "ExperimentConfig", "MismatchLeakError", "PRESETS",
    "REGISTRY", "RunRecord", "SummaryRow", "load_config", "run_experiment", "summarize",
]
