"""raclab: ensemble actor-critic agents with uncertainty-punished targets,
a tabular chain-MDP bias study and a Monte Carlo value-bias harness."""

__version__ = "0.1.0"
