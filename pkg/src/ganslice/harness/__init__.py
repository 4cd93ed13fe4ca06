"""Experiment orchestration: configs, training loop, reports and CLI."""

from .compare import CompareError, Report, ReportRow, compare, load_summary
from .experiment import (
    CHECKPOINT_NAME,
    METRICS_FIELDS,
    ConfigError,
    ExperimentConfig,
    env_fingerprint,
    evaluate_checkpoint,
    run_experiment,
)

__all__ = [
    "CHECKPOINT_NAME", "METRICS_FIELDS", "CompareError", "ConfigError", "ExperimentConfig", "Report",
    "ReportRow", "compare", "env_fingerprint", "evaluate_checkpoint", "load_summary", "run_experiment",
]
