"""Scenarios, studies, configuration, CSV output and the command-line interface."""

from .config import ConfigError, ScenarioConfig, default_config, dump_config, load_config, loads_config
from .runner import RunResult, build_spec, initial_densities, run_scenario
from .scenarios import channel_spec, manufactured_example, well_spec
from .studies import ConvergenceReport, convergence_study, iv_sweep, linear_fit_r2, manufactured_errors

__all__ = [
    "ConfigError", "ConvergenceReport", "RunResult", "ScenarioConfig", "build_spec", "channel_spec",
    "convergence_study", "default_config", "dump_config", "initial_densities", "iv_sweep",
    "linear_fit_r2", "load_config", "loads_config", "manufactured_errors", "manufactured_example",
    "run_scenario", "well_spec",
]
