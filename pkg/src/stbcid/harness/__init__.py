"""Experiment configuration, IQ recordings, Monte Carlo runner and command line interface."""

from .config import ExperimentConfig, load_config, parse_range
from .experiment import (
    CSV_COLUMNS, ResultRecord, format_csv, run_experiment, run_trial, simulate_rx, trial_seed,
    wilson_interval, write_csv,
)
from .recording import read_recording, sidecar_path, write_recording

__all__ = [
    "CSV_COLUMNS", "ExperimentConfig", "ResultRecord", "format_csv", "load_config", "parse_range",
    "read_recording", "run_experiment", "run_trial", "sidecar_path", "simulate_rx", "trial_seed",
    "wilson_interval", "write_csv", "write_recording",
]
