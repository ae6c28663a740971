"""Evaluation over a discrete beta family and Monte Carlo normalized Q bias.

Both routines only need two things from an agent:

* ``policy(obs_batch, beta)``: deterministic actions, ``beta`` scalar or per row
* ``q_values(obs_batch, act_batch, beta)``: the agent's value estimates

and from an environment ``sample_initial``, ``observe``, ``batch_step`` and
``horizon`` (``None`` when episodes always terminate). Rollouts are batched,
so evaluation never touches the agent's replay buffer, optimizers or random
streams, nor the training environment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from raclab.errors import ConfigError

DEGENERATE_DENOMINATOR = 1e-8


def beta_grid(b, count=12):
    """``count`` evenly spaced values ``b / count * i`` for ``i = 1..count``."""
    if b <= 0 or count < 1:
        raise ConfigError("beta grid needs b > 0 and count >= 1")
    return b / count * np.arange(1, count + 1)


def subset_grid(left, right, count=12):
    """Grid for the subset-size variant: ``left + (right - left) / count * i``.

    A plain ``b / count * i`` grid would propose k < 1, which is meaningless
    for a subset size.
    """
    if right <= left or count < 1:
        raise ConfigError("subset grid needs right > left and count >= 1")
    return left + (right - left) / count * np.arange(1, count + 1)


@dataclass(frozen=True)
class EvalProtocol:
    every: int = 1000
    episodes: int = 10
    max_steps: int = 1000


@dataclass
class EvalResult:
    score: float
    beta_star: float
    betas: np.ndarray
    means: np.ndarray


def episode_returns(policy, env, betas, episodes, rng, max_steps=1000):
    """Undiscounted returns ``[len(betas), episodes]`` of deterministic rollouts.

    Every beta sees the same initial states (common random numbers).
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    h = len(betas)
    init = env.sample_initial(episodes, rng)
    states = np.concatenate([init] * h, axis=0)
    row_beta = np.repeat(betas, episodes)
    limit = max_steps if env.horizon is None else min(max_steps, env.horizon)
    active = np.ones(len(states), dtype=bool)
    total = np.zeros(len(states))
    for _ in range(limit):
        if not active.any():
            break
        actions = policy(env.observe(states), row_beta)
        nxt, r, term = env.batch_step(states, actions, rng)
        total += np.where(active, r, 0.0)
        active &= ~np.asarray(term, dtype=bool)
        states = np.where(_rows(active, states), nxt, states)
    return total.reshape(h, episodes)


def _rows(mask, like):
    return mask.reshape(mask.shape + (1,) * (np.ndim(like) - 1))


def evaluate(agent, env, betas, episodes=10, rng=None, max_steps=1000):
    """Mean return per beta; the score is the best mean, ties to the smallest index."""
    rng = np.random.default_rng() if rng is None else rng
    returns = episode_returns(agent.policy, env, betas, episodes, rng, max_steps)
    means = returns.mean(axis=1)
    best = int(np.argmax(means))
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    return EvalResult(float(means[best]), float(betas[best]), betas, means)


@dataclass
class BiasReport:
    mean: float
    std: float
    beta_star: float
    n_pairs: int
    n_targets: int
    n_rollouts: int
    denominator: float
    degenerate: bool
    normalized: np.ndarray
    estimates: np.ndarray
    truth: np.ndarray


def collect_pairs(agent, env, beta, n, rng, horizon=None):
    """``n`` consecutive on-policy (state, action) pairs, resetting at episode ends."""
    horizon = env.horizon if horizon is None else horizon
    state = env.sample_initial(1, rng)
    states, actions = [], []
    t = 0
    for _ in range(n):
        a = agent.policy(env.observe(state), beta)
        states.append(state[0])
        actions.append(np.asarray(a)[0])
        nxt, _, term = env.batch_step(state, a, rng)
        t += 1
        if bool(np.asarray(term)[0]) or (horizon is not None and t >= horizon):
            state, t = env.sample_initial(1, rng), 0
        else:
            state = nxt
    return np.array(states), np.array(actions)


def mc_q_values(agent, env, beta, states, actions, gamma, n_rollouts, max_steps, rng):
    """Discounted Monte Carlo returns from each ``(state, action)``, averaged over rollouts.

    Rollouts ignore the environment's time limit (a truncated episode is not
    an end of the task) and stop at a terminal state or after ``max_steps``.
    """
    m = len(states)
    s = np.repeat(states, n_rollouts, axis=0)
    a = np.repeat(actions, n_rollouts, axis=0)
    active = np.ones(len(s), dtype=bool)
    ret = np.zeros(len(s))
    disc = 1.0
    for _ in range(max_steps):
        nxt, r, term = env.batch_step(s, a, rng)
        ret += np.where(active, disc * r, 0.0)
        active &= ~np.asarray(term, dtype=bool)
        if not active.any():
            break
        disc *= gamma
        # finished rollouts stay on their last non-terminal state; rewards are masked
        s = np.where(_rows(active, s), nxt, s)
        a = agent.policy(env.observe(s), beta)
    return ret.reshape(m, n_rollouts).mean(axis=1)


def estimate_bias(agent, env, beta_star, gamma=0.99, rng=None, n_pairs=100, n_targets=20,
                  n_rollouts=20, max_steps=1500, ground_truth=None):
    """Normalized Q bias of the policy at ``beta_star``.

    ``ground_truth(states, actions)``, when given, replaces the Monte Carlo
    rollouts. The denominator is the magnitude of the mean ground-truth value
    over the target pairs; below 1e-8 the report is flagged as degenerate and
    its statistics are NaN.
    """
    rng = np.random.default_rng() if rng is None else rng
    if n_targets < 2 or n_targets > n_pairs:
        raise ConfigError("need 2 <= n_targets <= n_pairs")
    states, actions = collect_pairs(agent, env, beta_star, n_pairs, rng)
    idx = rng.choice(n_pairs, size=n_targets, replace=False)
    states, actions = states[idx], actions[idx]
    if ground_truth is None:
        truth = mc_q_values(agent, env, beta_star, states, actions, gamma, n_rollouts, max_steps, rng)
    else:
        truth = np.asarray(ground_truth(states, actions), dtype=np.float64)
    est = np.asarray(agent.q_values(env.observe(states), actions, beta_star), dtype=np.float64)
    denom = abs(float(np.mean(truth)))
    degenerate = denom < DEGENERATE_DENOMINATOR
    if degenerate:
        normalized = np.full(n_targets, np.nan)
    else:
        normalized = (est - truth) / denom
    return BiasReport(
        float(np.mean(normalized)), float(np.std(normalized, ddof=1)), float(beta_star),
        n_pairs, n_targets, n_rollouts, denom, degenerate, normalized, est, truth,
    )
