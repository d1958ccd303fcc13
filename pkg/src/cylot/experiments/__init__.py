"""Configuration, experiment drivers, reports and the command line."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .pipeline import (gaussian_w2_oracle, run_convergence, run_oracle_comparison,
                       run_smoothing, run_solve, run_wiener_demo)
from .reports import (ConvergenceReport, OracleReport, RankRecord, SmoothReport,
                      SolveSummary, emit_report, load_report, quantized,
                      without_runtime)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "gaussian_w2_oracle", "run_convergence", "run_oracle_comparison",
           "run_smoothing", "run_solve", "run_wiener_demo", "ConvergenceReport",
           "OracleReport", "RankRecord", "SmoothReport", "SolveSummary",
           "emit_report", "load_report", "quantized", "without_runtime"]
