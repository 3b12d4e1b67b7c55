"""Experiments: configuration files, CLI, sweeps, benches, reports."""

from .config import (ConfigError, DatasetConfig, ExperimentConfig,
                     NetworkConfig, load_config, parse_config,
                     serialize_config)
from .runs import (SweepRow, TimingRecord, build_datasets,
                   build_network_spec, compare_selection_strategies,
                   compute_reference_accuracy, linear_fit, run_evolve,
                   run_size_sweep, run_timing_bench, run_train)
from .svg import PlotDataError, emit_plot

__all__ = [
    "ConfigError", "DatasetConfig", "ExperimentConfig", "NetworkConfig",
    "load_config", "parse_config", "serialize_config", "SweepRow",
    "TimingRecord", "build_datasets", "build_network_spec",
    "compare_selection_strategies", "compute_reference_accuracy",
    "linear_fit", "run_evolve", "run_size_sweep", "run_timing_bench",
    "run_train", "PlotDataError", "emit_plot",
]
