"""Tabular ensemble Q-learning on the chain MDP with injected read noise.

Three agent families share one update loop:

``lb``
    in-target minimization over a random pair of tables (REDQ-style lower bound);
    acts Boltzmann on the noisy ensemble mean.
``qb<beta>``
    same training target, but acts on ``mean + beta * std`` of the noisy reads.
``rac``
    a family of ensembles, one per beta on a grid, each trained with the
    punished target ``mean - beta * std``; behaviour samples a member from
    the exploration part of the grid.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from raclab.distributions import boltzmann_probs, ensemble_mean_std, random_subsets
from raclab.envs import CHAIN_OPTIMAL, CHAIN_START, CHAIN_STATES, chain_batch_step, chain_step
from raclab.errors import ConfigError
from raclab.replay import ReplayBuffer
from raclab.rng import make_streams

CSV_COLUMNS = ("step", "seed", "optimal_visit_freq", "low_value_ratio", "q_bias")


@dataclass(frozen=True)
class TabularConfig:
    n_members: int = 10
    lr: float = 0.01
    gamma: float = 0.9
    noise: float = 0.1
    init_width: float = 5.0
    temperature: float = 0.1
    buffer_size: int = 5000
    batch_size: int = 32
    subset_size: int = 2
    rac_train_max: float = 0.8
    rac_explore_max: float = 0.3
    rac_grid: int = 12
    random_steps: int = 5000
    checkpoint_every: int = 100
    bias_rollouts: int = 1000

    def __post_init__(self):
        if self.n_members < 2:
            raise ConfigError("tabular ensemble needs at least 2 tables")
        if not 1 <= self.subset_size <= self.n_members:
            raise ConfigError("subset size must lie in [1, n_members]")


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    beta: float = 0.0

    @property
    def label(self):
        if self.kind == "qb":
            return f"qb{self.beta:g}"
        return self.kind

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text in ("lb", "rac"):
            return cls(text)
        m = re.fullmatch(r"qb(\d+(?:\.\d*)?(?:e[+-]?\d+)?|\.\d+(?:e[+-]?\d+)?)", text)
        if m:
            return cls("qb", float(m.group(1)))
        raise ConfigError(f"unknown tabular agent {text!r} (use lb, qb<beta>, rac)")


def noisy_q(values, rng, width=0.1):
    """Table reads with fresh U(-width, width) approximation noise."""
    values = np.asarray(values, dtype=np.float64)
    if width == 0:
        return values.copy()
    return values + rng.uniform(-width, width, size=values.shape)


def lb_target(tables, r, s2, done, gamma, rng, noise=0.1, subset_size=2):
    """``r + gamma * max_a' min_{i in M} Q_i(s', a')`` with a random subset M per element.

    ``tables`` is ``[N, S, A]``; ``r``, ``s2``, ``done`` are length-B arrays.
    """
    n, b = tables.shape[0], len(s2)
    members = random_subsets(b, subset_size, n, rng)  # [B, m]
    reads = noisy_q(tables[members, s2[:, None], :], rng, noise)  # [B, m, A]
    return r + gamma * (1.0 - done) * reads.min(axis=1).max(axis=-1)


def punished_tabular_target(tables, r, s2, done, beta, gamma, rng, noise=0.1):
    """``r + gamma * max_a' [mean_i Q_i - beta * std_i Q_i](s', a')``.

    ``tables`` may carry leading family axes (``[..., N, S, A]``) with ``beta``
    broadcastable to those axes.
    """
    reads = noisy_q(tables[..., s2, :], rng, noise)  # [..., N, B, A]
    mean, std = ensemble_mean_std(reads, axis=-3)
    beta = np.asarray(beta, dtype=np.float64)[..., None, None]
    return r + gamma * (1.0 - done) * (mean - beta * std).max(axis=-1)


def behavior_q(tables, s, beta, rng, noise=0.1):
    """Per-action ``mean + beta * std`` of noisy reads at state ``s``."""
    reads = noisy_q(tables[:, s, :], rng, noise)
    mean, std = ensemble_mean_std(reads, axis=0)
    return mean + beta * std


@dataclass
class MdpMetrics:
    steps: np.ndarray
    optimal_visit_freq: np.ndarray
    low_value_ratio: np.ndarray
    q_bias: np.ndarray
    seed: int = 0

    def rows(self):
        for i, step in enumerate(self.steps):
            yield (int(step), self.seed, float(self.optimal_visit_freq[i]),
                   float(self.low_value_ratio[i]), float(self.q_bias[i]))


class TabularAgent:
    """Tables ``[F, N, S, A]``: F = 1 for lb/qb, F = grid size for rac."""

    def __init__(self, spec, config, rng):
        self.spec = spec
        self.cfg = config
        if spec.kind == "rac":
            h = config.rac_grid
            self.betas = config.rac_train_max / h * np.arange(1, h + 1)
            self.explore_members = np.flatnonzero(self.betas <= config.rac_explore_max + 1e-12)
            if len(self.explore_members) == 0:
                raise ConfigError("exploration range contains no grid member")
        elif spec.kind in ("lb", "qb"):
            self.betas = np.zeros(1)
        else:
            raise ConfigError(f"unknown agent kind {spec.kind!r}")
        w = config.init_width
        shape = (len(self.betas), config.n_members, CHAIN_STATES, 2)
        self.q = rng.uniform(-w, w, size=shape)

    def act(self, s, rng):
        cfg = self.cfg
        if self.spec.kind == "rac":
            member = self.explore_members[rng.integers(len(self.explore_members))]
            scores = behavior_q(self.q[member], s, 0.0, rng, cfg.noise)
        else:
            scores = behavior_q(self.q[0], s, self.spec.beta, rng, cfg.noise)
        p = boltzmann_probs(scores, cfg.temperature)
        return int(rng.random() > p[0])

    def update(self, batch, rng):
        cfg = self.cfg
        s, a = batch.s, batch.a
        if self.spec.kind == "rac":
            y = punished_tabular_target(self.q, batch.r, batch.s2, batch.done, self.betas, cfg.gamma, rng, cfg.noise)
        else:
            y = lb_target(self.q[0], batch.r, batch.s2, batch.done, cfg.gamma, rng, cfg.noise, cfg.subset_size)[None]
        f, n = self.q.shape[:2]
        # flat index of (member, table, state, action); all F*N tables share the batch
        base = (np.arange(f * n)[:, None] * CHAIN_STATES) * 2
        flat = (base + (s * 2 + a)[None, :]).ravel()
        current = self.q.reshape(-1)[flat]
        target = np.repeat(y, n, axis=0).ravel()
        delta = np.bincount(flat, weights=cfg.lr * (target - current), minlength=self.q.size)
        self.q += delta.reshape(self.q.shape)

    def eval_scores(self, member=0):
        """Noise-free value estimates ``[S, A]`` used for greedy evaluation."""
        mean, std = ensemble_mean_std(self.q[member], axis=0)
        if self.spec.kind == "qb":
            return mean + self.spec.beta * std
        return mean


def greedy_return_mc(greedy, n_rollouts, gamma, rng):
    """Monte Carlo discounted return of a deterministic chain policy from the start state."""
    states = np.full(n_rollouts, CHAIN_START)
    active = np.ones(n_rollouts, dtype=bool)
    ret = np.zeros(n_rollouts)
    disc = 1.0
    while active.any():
        nxt, r, term = chain_batch_step(states, greedy[states], rng)
        ret += np.where(active, disc * r, 0.0)
        active &= ~term
        states = np.where(active, nxt, CHAIN_START)
        disc *= gamma
    return ret.mean()


def q_bias(agent, rng):
    """Bias of the best member's estimate at (start, greedy action) against MC truth."""
    cfg = agent.cfg
    seed = int(rng.integers(2**63))
    best = None
    for m in range(len(agent.betas)):
        scores = agent.eval_scores(m)
        greedy = scores.argmax(axis=1)
        truth = greedy_return_mc(greedy, cfg.bias_rollouts, cfg.gamma, np.random.default_rng(seed))
        if best is None or truth > best[0]:
            best = (truth, scores[CHAIN_START, greedy[CHAIN_START]] - truth)
    return best[1]


def run_tabular_seed(spec, steps, seed, config=None):
    """Train one agent on the chain MDP; metrics every ``checkpoint_every`` steps."""
    cfg = TabularConfig() if config is None else config
    streams = make_streams(seed)
    agent = TabularAgent(spec, cfg, streams["init"])
    buffer = ReplayBuffer(cfg.buffer_size, obs_dtype=np.int64, act_dtype=np.int64)
    env_rng, act_rng, mb_rng, eval_rng = streams["env"], streams["exploration"], streams["minibatch"], streams["mc"]

    ckpts = []
    window = {"opt": 0, "local": 0, "low": 0}
    s = CHAIN_START
    for t in range(1, steps + 1):
        a = int(act_rng.integers(2)) if t <= cfg.random_steps else agent.act(s, act_rng)
        s2, r, term = chain_step(s, a, env_rng)
        buffer.push(s, a, r, s2, term)
        if 2 <= s2 <= 8:
            window["low"] += 1
        if term:
            window["opt" if s2 == CHAIN_OPTIMAL else "local"] += 1
            s = CHAIN_START
        else:
            s = s2
        if t > cfg.random_steps:
            agent.update(buffer.sample(cfg.batch_size, mb_rng), mb_rng)
        if t % cfg.checkpoint_every == 0:
            ends = window["opt"] + window["local"]
            freq = window["opt"] / ends if ends else np.nan
            low = window["low"] / window["opt"] - 7.0 if window["opt"] else np.nan
            ckpts.append((t, freq, low, q_bias(agent, eval_rng)))
            window = {"opt": 0, "local": 0, "low": 0}
    arr = np.array(ckpts, dtype=np.float64).reshape(-1, 4)
    return MdpMetrics(arr[:, 0].astype(int), arr[:, 1], arr[:, 2], arr[:, 3], seed)


@dataclass
class AggregateMetrics:
    label: str
    steps: np.ndarray
    optimal_visit_freq: np.ndarray
    low_value_ratio: np.ndarray
    q_bias: np.ndarray
    per_seed: list

    def steps_to_reach(self, threshold):
        """First checkpoint where the seed-mean optimal-visit frequency reaches ``threshold``."""
        hit = np.flatnonzero(self.optimal_visit_freq >= threshold)
        return int(self.steps[hit[0]]) if len(hit) else None


def run_tabular_experiment(spec, steps, seeds=8, config=None):
    """Run ``seeds`` independent seeds (0..seeds-1 or an explicit list) and average."""
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    runs = [run_tabular_seed(spec, steps, sd, config) for sd in seed_list]
    stack = lambda name: np.vstack([getattr(m, name) for m in runs])
    # checkpoints where no seed reached state 9 are all-NaN
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        low = np.nanmean(stack("low_value_ratio"), axis=0)
    return AggregateMetrics(
        spec.label, runs[0].steps, stack("optimal_visit_freq").mean(axis=0), low,
        stack("q_bias").mean(axis=0), runs,
    )
