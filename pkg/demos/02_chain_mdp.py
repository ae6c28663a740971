"""Tabular chain MDP: which exploration rule finds the far goal fastest?

Every episode starts in state 1. Stepping Right ends the episode at once with
reward 0.1; stepping Left walks through eight noisy states (reward drawn from
U(-1, 1)) towards state 9, which pays 1. Each agent keeps an ensemble of ten
noisy tables and acts with a Boltzmann policy:

* ``lb`` trains with a min-over-pairs target and acts on the ensemble mean;
* ``qb<beta>`` trains the same way and acts on mean + beta * std;
* ``rac`` keeps one ensemble per punishment weight on a grid, trains each with
  its own punished target, and acts through a member drawn at random.

The script prints, for each agent, the optimal-state visit frequency every
1000 steps (mean over seeds) and the bias of the best member's value at the
start state. Pass ``--seeds`` and ``--steps`` to trade time for precision.

    python demos/02_chain_mdp.py --seeds 4 --steps 15000
"""
import argparse
import time

import numpy as np

from raclab.tabular import AgentSpec, TabularConfig, run_tabular_experiment

parser = argparse.ArgumentParser()
parser.add_argument("--seeds", type=int, default=4)
parser.add_argument("--steps", type=int, default=15_000)
parser.add_argument("--agents", default="lb,qb0.5,qb2,rac")
args = parser.parse_args()

cfg = TabularConfig()
start = time.perf_counter()
for text in args.agents.split(","):
    m = run_tabular_experiment(AgentSpec.parse(text), args.steps, args.seeds, cfg)
    every = 1000 // cfg.checkpoint_every
    freq = " ".join(f"{f:4.2f}" for f in m.optimal_visit_freq[every - 1::every])
    learning = m.steps > cfg.random_steps
    reach = m.steps_to_reach(0.9)
    print(f"{m.label:>6}  visit frequency per 1k steps: {freq}")
    print(f"{'':>6}  reaches 0.9 at {reach if reach else 'never'}; "
          f"peak |bias| after warm-up {np.max(np.abs(m.q_bias[learning])):.3f}")
print(f"done in {time.perf_counter() - start:.0f} s")
