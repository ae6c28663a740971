"""How the punishment weight beta moves a bootstrap target.

An ensemble of value estimates gives both a mean and a spread. The punished
target subtracts beta times the spread from the mean, so beta slides the
backup between optimism (beta < 0, not used here) and pessimism. This script
prints the two-member worked example, sweeps beta on one ensemble, and then
measures the bias of the target when every member is the true value plus
independent noise.

    python demos/01_punished_target.py
"""
import numpy as np

from raclab.agents import punished_target

r, gamma = np.array([1.0]), 0.99
q = np.array([[2.0], [4.0]])
print("two members (2, 4), r = 1, gamma = 0.99")
for beta in (0.0, 0.5, 1.0):
    y = punished_target(q, beta, r, np.zeros(1), gamma)[0]
    print(f"  beta = {beta:.1f}: target {y:.10f}")
print("  a terminal transition ignores the ensemble:", punished_target(q, 0.5, r, np.ones(1), gamma)[0])

# Members are the true next-state value (0 everywhere) plus noise; the
# behaviour policy picks the best of ten actions by the ensemble mean, which
# biases the mean upwards. Raising beta trades that overestimation for
# underestimation.
rng = np.random.default_rng(0)
n_members, n_actions, trials = 10, 10, 20_000
noise = rng.normal(0.0, 1.0, size=(trials, n_members, n_actions))
best = noise.mean(axis=1).argmax(axis=1)
chosen = noise[np.arange(trials), :, best]           # [trials, members]
print("\nbias of the bootstrapped value after a greedy choice among 10 actions")
for beta in (0.0, 0.1, 0.2, 0.3, 0.5, 1.0):
    y = punished_target(chosen.T, beta, np.zeros(trials), np.zeros(trials), 1.0)
    print(f"  beta = {beta:.1f}: mean bias {y.mean():+.4f}")
