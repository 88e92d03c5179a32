"""Experiment harness: configuration, trials, statistics, reports and CLI."""

from .config import ExperimentSpec, SpecError, build_spec, load_spec, parse_config_text
from .experiment import (CSV_COLUMNS, BoundReport, ExperimentResult, bound_report, check_conditions,
                         mean_confidence_interval, resolve, run_experiment, verify_bounds)
