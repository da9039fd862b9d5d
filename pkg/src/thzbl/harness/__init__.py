"""Experiment harness: presets, seeded sweeps, result files and the CLI."""
from .config import (METHODS, PRESETS, ExperimentSpec, FullScaleRequired, Scenario, get_preset,
                     load_config, parse_methods, parse_snr_grid)
from .sweep import ResultRow, nmse, run_sweep, run_trials, simulate_trial

__all__ = ["METHODS", "PRESETS", "ExperimentSpec", "FullScaleRequired", "Scenario", "get_preset",
           "load_config", "parse_methods", "parse_snr_grid", "ResultRow", "nmse", "run_sweep",
           "run_trials", "simulate_trial"]
