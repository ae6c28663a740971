"""Experiment configuration, execution and plotting."""
from raclab.runner.config import RunConfig, dump_config, load_config, parse_config
from raclab.runner.plot import plot
from raclab.runner.run import OUT_ENV, run_experiment, run_tabular_study

__all__ = ["RunConfig", "dump_config", "load_config", "parse_config", "plot", "OUT_ENV",
           "run_experiment", "run_tabular_study"]
