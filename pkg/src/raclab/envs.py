"""Environments: the 10-state chain MDP and a point-mass control toy.

Each environment exposes a stateful ``reset``/``step`` interface plus pure
batched dynamics (``batch_step``/``observe``) used for vectorized Monte Carlo
rollouts from arbitrary saved states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from raclab.errors import ConfigError, DivergenceError, UsageError

LEFT, RIGHT = 0, 1


@dataclass
class EnvStep:
    obs: np.ndarray
    reward: float
    terminal: bool
    truncated: bool = False

    @property
    def done(self):
        return self.terminal or self.truncated


# ---------------------------------------------------------------- chain MDP

CHAIN_STATES = 10
CHAIN_START = 1
CHAIN_OPTIMAL = 9
CHAIN_LOCAL = 0


def chain_reset(rng=None):
    return CHAIN_START


def chain_step(state, action, rng):
    """One transition of the chain. Returns ``(next_state, reward, terminal)``.

    Left moves one state towards 9; Right jumps to terminal state 0.
    """
    if not 1 <= state <= 8:
        raise UsageError(f"state {state} is terminal; reset first")
    if action == RIGHT:
        return CHAIN_LOCAL, 0.1, True
    if action != LEFT:
        raise ConfigError(f"unknown chain action {action!r}")
    if state == 8:
        return CHAIN_OPTIMAL, 1.0, True
    return state + 1, float(rng.uniform(-1.0, 1.0)), False


def chain_batch_step(states, actions, rng):
    states = np.asarray(states)
    actions = np.asarray(actions)
    right = actions == RIGHT
    nxt = np.where(right, CHAIN_LOCAL, states + 1)
    rewards = np.where(right, 0.1, np.where(nxt == CHAIN_OPTIMAL, 1.0, rng.uniform(-1.0, 1.0, states.shape)))
    terminal = (nxt == CHAIN_LOCAL) | (nxt == CHAIN_OPTIMAL)
    return nxt, rewards, terminal


def chain_value_iteration(gamma, tol=1e-12):
    """Optimal ``Q[state, action]`` of the chain (expected rewards), terminals zero."""
    q = np.zeros((CHAIN_STATES, 2))
    while True:
        v = q.max(axis=1)
        v[[CHAIN_LOCAL, CHAIN_OPTIMAL]] = 0.0
        new = np.zeros_like(q)
        for s in range(1, 9):
            new[s, RIGHT] = 0.1
            new[s, LEFT] = (1.0 if s == 8 else 0.0) + gamma * v[s + 1]
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new


class ChainMDP:
    """Chain MDP with optional one-hot observations."""

    name = "chain-mdp"
    n_actions = 2
    horizon = None

    def __init__(self, rng=None, one_hot=False):
        self.rng = np.random.default_rng() if rng is None else rng
        self.one_hot = one_hot
        self.state = None
        self.obs_dim = CHAIN_STATES if one_hot else 1
        self.act_dim = 1

    def observe(self, states):
        states = np.asarray(states)
        if self.one_hot:
            return np.eye(CHAIN_STATES)[states]
        return states

    def reset(self):
        self.state = chain_reset(self.rng)
        return self.observe(self.state)

    def step(self, action):
        if self.state is None:
            raise UsageError("step before reset")
        nxt, r, term = chain_step(self.state, int(action), self.rng)
        self.state = None if term else nxt
        return EnvStep(self.observe(nxt), r, term)

    def get_state(self):
        return self.state

    def set_state(self, state):
        self.state = int(state)

    def batch_step(self, states, actions, rng):
        return chain_batch_step(states, np.asarray(actions).reshape(np.shape(states)), rng)

    def sample_initial(self, n, rng=None):
        return np.full(n, CHAIN_START)


# --------------------------------------------------------------- point mass

@dataclass(frozen=True)
class ContinuousToySpec:
    dims: int = 1
    dt: float = 0.05
    horizon: int = 200
    pos_bound: float = 2.0
    vel_bound: float = 2.0
    action_scale: float = 1.0
    init_pos: float = 1.0
    action_cost: float = 0.01
    goal: float = 0.0

    @property
    def obs_dim(self):
        return 2 * self.dims

    @property
    def act_dim(self):
        return self.dims


def toy_reset(spec, rng):
    """Random position in [-init_pos, init_pos]^d, zero velocity."""
    x = rng.uniform(-spec.init_pos, spec.init_pos, size=spec.dims)
    return np.concatenate([x, np.zeros(spec.dims)])


def toy_batch_step(spec, states, actions):
    """Deterministic point-mass dynamics on ``[..., 2d]`` states."""
    actions = np.asarray(actions, dtype=np.float64)
    if np.any(np.isnan(actions)):
        raise DivergenceError("NaN action passed to point-mass")
    a = np.clip(actions, -1.0, 1.0)
    d = spec.dims
    x, v = states[..., :d], states[..., d:]
    x2 = np.clip(x + v * spec.dt, -spec.pos_bound, spec.pos_bound)
    v2 = np.clip(v + spec.action_scale * a * spec.dt, -spec.vel_bound, spec.vel_bound)
    err = x2 - spec.goal
    reward = -np.sum(err * err, axis=-1) - spec.action_cost * np.sum(a * a, axis=-1)
    return np.concatenate([x2, v2], axis=-1), reward


def toy_step(spec, state, action):
    nxt, r = toy_batch_step(spec, np.asarray(state, dtype=np.float64), action)
    return nxt, float(r)


def scripted_controller(spec, obs, kp=9.0, kd=4.75):
    """Saturated PD controller towards the goal; near-optimal for the toy."""
    obs = np.asarray(obs, dtype=np.float64)
    d = spec.dims
    return np.clip(-kp * (obs[..., :d] - spec.goal) - kd * obs[..., d:], -1.0, 1.0)


class PointMass:
    name = "point-mass"

    def __init__(self, rng=None, spec=None):
        self.rng = np.random.default_rng() if rng is None else rng
        self.spec = ContinuousToySpec() if spec is None else spec
        self.obs_dim = self.spec.obs_dim
        self.act_dim = self.spec.act_dim
        self.horizon = self.spec.horizon
        self.state = None
        self.t = 0

    def observe(self, states):
        return np.asarray(states, dtype=np.float64).copy()

    def reset(self):
        self.state = toy_reset(self.spec, self.rng)
        self.t = 0
        return self.observe(self.state)

    def step(self, action):
        if self.state is None:
            raise UsageError("step before reset")
        self.state, r = toy_step(self.spec, self.state, action)
        self.t += 1
        truncated = self.t >= self.spec.horizon
        obs = self.observe(self.state)
        if truncated:
            self.state = None
        return EnvStep(obs, r, False, truncated)

    def get_state(self):
        return None if self.state is None else (self.state.copy(), self.t)

    def set_state(self, state):
        self.state, self.t = np.array(state[0], dtype=np.float64), int(state[1])

    def batch_step(self, states, actions, rng=None):
        nxt, r = toy_batch_step(self.spec, states, actions)
        return nxt, r, np.zeros(r.shape, dtype=bool)

    def sample_initial(self, n, rng):
        return np.stack([toy_reset(self.spec, rng) for _ in range(n)])


ENVIRONMENTS = {ChainMDP.name: ChainMDP, PointMass.name: PointMass}


def make_env(name, rng=None, **kwargs):
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise ConfigError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    return cls(rng=rng, **kwargs)
