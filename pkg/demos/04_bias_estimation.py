"""Monte Carlo estimate of the normalized value bias of a critic.

The estimator rolls out the greedy policy to collect state-action pairs,
estimates the true value of a subset of them with Monte Carlo returns, and
reports (critic - truth) / |mean truth| averaged over the subset.

On the chain MDP the true values are known exactly from value iteration, so a
critic equal to the truth plus a constant c must score c / |mean truth|.
This script checks that, and then varies the number of rollouts per pair.
Past a few dozen rollouts the spread over seeds stops shrinking, because the
random choice of pairs, not the return noise, dominates it.

    python demos/04_bias_estimation.py
"""
import numpy as np

from raclab.envs import LEFT, ChainMDP, chain_value_iteration
from raclab.evaluation import estimate_bias

GAMMA = 0.9


class ShiftedCritic:
    def __init__(self, c):
        self.q = chain_value_iteration(GAMMA) + c

    def policy(self, obs, beta=None):
        return np.full(np.shape(obs), LEFT)

    def q_values(self, obs, act, beta=None):
        return self.q[np.asarray(obs).ravel(), np.asarray(act).ravel()]


q_star = chain_value_iteration(GAMMA)
exact = lambda s, a: q_star[np.asarray(s).ravel(), np.asarray(a).ravel()]
for c in (0.0, 0.5, 1.0):
    agent = ShiftedCritic(c)
    est = estimate_bias(agent, ChainMDP(), 0.0, GAMMA, np.random.default_rng(0))
    ref = estimate_bias(agent, ChainMDP(), 0.0, GAMMA, np.random.default_rng(0), ground_truth=exact)
    print(f"c = {c:.1f}: Monte Carlo {est.mean:+.4f} (std over pairs {est.std:.3f}), exact {ref.mean:+.4f}")

print("\nspread of the estimate over 20 seeds, c = 0.5")
agent = ShiftedCritic(0.5)
for n in (5, 20, 80):
    vals = [estimate_bias(agent, ChainMDP(), 0.0, GAMMA, np.random.default_rng(s), n_rollouts=n).mean
            for s in range(20)]
    print(f"  {n:3d} rollouts per pair: mean {np.mean(vals):+.4f}, std {np.std(vals):.4f}")
