"""Experiment harness: configuration, runs, scans, presets and output files."""
from .config import ConfigError, ExperimentConfig, from_dict, load
from .emit import emit_results, load_results
from .presets import PRESET_NAMES, preset, scenario_presets
from .runner import RunResult, run_cell, run_scan, run_single

__all__ = [
    "ConfigError", "ExperimentConfig", "from_dict", "load", "emit_results", "load_results", "PRESET_NAMES",
    "preset", "scenario_presets", "RunResult", "run_cell", "run_scan", "run_single",
]
