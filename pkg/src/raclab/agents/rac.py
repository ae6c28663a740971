"""The deep agent: one class, four variants selected by ``AgentConfig.variant``.

``rac-sac``
    beta-conditioned SAC with a punished ensemble target and a beta-conditioned
    temperature network.
``rac-td3``
    beta-conditioned deterministic actor with target-policy smoothing; no
    actor target network and no delayed actor updates.
``vanilla-rac``
    unconditioned SAC with a constant beta and a single learned temperature.
``rac-intarget``
    conditioned on a fractional subset size k; the target takes the minimum
    over a random member subset of size floor(k) or floor(k) + 1.

Random streams are split by purpose so that switching variants changes as
few draws as possible: ``minibatch`` (replay indices), ``beta`` (training
beta or k), ``policy`` (reparameterization, smoothing noise, subset masks)
and ``exploration`` (everything used while acting).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from raclab.agents.config import AgentConfig
from raclab.agents.losses import (
    critic_loss,
    intarget_target,
    punished_target,
    sac_actor_loss,
    td3_actor_loss,
    temperature_loss,
)
from raclab.agents.networks import (
    CriticEnsemble,
    DeterministicActor,
    GaussianActor,
    ScalarTemperature,
    TemperatureNet,
    with_cond,
)
from raclab.distributions import (
    clipped_gaussian_noise,
    random_subset_mask,
    sample_subset_sizes,
    squashed_sample,
)
from raclab.numcore import adam_step, warmup_lr
from raclab.replay import ReplayBuffer
from raclab.rng import make_streams

AGENT_STREAMS = ("init", "minibatch", "beta", "policy", "exploration")


@dataclass
class UpdateInfo:
    critic_loss: float
    actor_loss: float
    temp_loss: float
    alpha: float
    critic_lr: float


class RacAgent:
    def __init__(self, config, obs_dim, act_dim, seed=0):
        self.cfg = config if isinstance(config, AgentConfig) else AgentConfig(**config)
        self.obs_dim, self.act_dim = int(obs_dim), int(act_dim)
        self.seed = int(seed)
        self.rngs = make_streams(seed, AGENT_STREAMS)
        cfg, init = self.cfg, self.rngs["init"]
        c = 1 if cfg.conditioned else 0
        self.critics = CriticEnsemble(self.obs_dim + self.act_dim + c, cfg.hidden, cfg.n_critics, init)
        if cfg.variant == "rac-td3":
            self.actor = DeterministicActor(self.obs_dim + c, self.act_dim, cfg.hidden, init)
            self.temp = None
        else:
            self.actor = GaussianActor(self.obs_dim + c, self.act_dim, cfg.hidden, init)
            if cfg.variant == "vanilla-rac":
                self.temp = ScalarTemperature(cfg.vanilla_log_alpha)
            else:
                self.temp = TemperatureNet(cfg.temp_hidden, cfg.xi, init, cfg.temp_input_scale)
        self.buffer = ReplayBuffer(cfg.capacity, (self.obs_dim,), (self.act_dim,))
        self.target_entropy = cfg.entropy_target(self.act_dim)
        self.t = 0
        self.n_updates = 0

    # ------------------------------------------------------------ acting

    @property
    def is_sac(self):
        return self.cfg.variant != "rac-td3"

    def encode(self, beta):
        """Network input for a beta (or k) value; ``None`` for unconditioned nets."""
        if not self.cfg.conditioned:
            return None
        return np.log(np.asarray(beta, dtype=np.float64))

    def act(self, obs):
        """Exploration action for one observation.

        Uniform in [-1, 1]^d during the initial random phase; afterwards
        beta is drawn from U2 and the policy is sampled (SAC) or perturbed
        with Gaussian noise (TD3).
        """
        rng = self.rngs["exploration"]
        if self.t < self.cfg.random_steps:
            return rng.uniform(-1.0, 1.0, size=self.act_dim)
        obs = np.asarray(obs, dtype=np.float64)
        cond = self.encode(self.cfg.u2.sample(rng)) if self.cfg.conditioned else None
        x = with_cond(obs[None, :], cond)
        if self.is_sac:
            params, _ = self.actor.dist(x, cache=False)
            a, _, _ = squashed_sample(params, rng.standard_normal((1, self.act_dim)))
            return a[0]
        a = self.actor.deterministic(x)[0]
        if self.cfg.td3_explore > 0:
            a = a + rng.normal(0.0, self.cfg.td3_explore, size=self.act_dim)
        return np.clip(a, -1.0, 1.0)

    def policy(self, obs, beta=None):
        """Deterministic (exploitation) actions for a batch ``[M, obs_dim]`` at ``beta``."""
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        cond = self.encode(beta) if self.cfg.conditioned else None
        return self.actor.deterministic(with_cond(obs, cond))

    def q_values(self, obs, act, beta=None):
        """Mean online critic value at ``(obs, act, beta)`` for batched inputs."""
        x = np.concatenate([np.atleast_2d(obs), np.atleast_2d(act)], axis=-1)
        cond = self.encode(beta) if self.cfg.conditioned else None
        return self.critics.values(with_cond(x, cond), cache=False).mean(axis=0)

    def observe(self, obs, action, reward, next_obs, terminal):
        """Store a transition and advance the environment-step counter."""
        self.buffer.push(obs, action, reward, next_obs, terminal)
        self.t += 1

    @property
    def ready(self):
        return self.t >= self.cfg.random_steps and len(self.buffer) > 0

    # ------------------------------------------------------------ training

    def _training_cond(self, size):
        """Per-element training values from U1 (beta or k) and their encodings."""
        cfg = self.cfg
        if cfg.variant == "vanilla-rac":
            return np.full(size, cfg.vanilla_beta), None
        values = cfg.u1.sample(self.rngs["beta"], size)
        return values, self.encode(values)

    def compute_target(self, batch, values, cond):
        """Bootstrap target for each element given its beta (or k) value."""
        cfg, rng = self.cfg, self.rngs["policy"]
        b = len(batch)
        if self.is_sac:
            params, _ = self.actor.dist(with_cond(batch.s2, cond), cache=False)
            a2, logp2, _ = squashed_sample(params, rng.standard_normal((b, self.act_dim)))
            entropy = np.asarray(self.temp.alpha(cond)) * logp2
        else:
            a2 = self.actor.deterministic(with_cond(batch.s2, cond))
            noise = clipped_gaussian_noise(cfg.td3_sigma, cfg.td3_clip, (b, self.act_dim), rng)
            a2 = np.clip(a2 + noise, -1.0, 1.0)
            entropy = None
        q_next = self.critics.target_values(with_cond(np.concatenate([batch.s2, a2], axis=-1), cond))
        if cfg.variant == "rac-intarget":
            mask = random_subset_mask(sample_subset_sizes(values, rng), cfg.n_critics, rng)
            return intarget_target(q_next, mask, batch.r, batch.done, cfg.gamma, entropy)
        return punished_target(q_next, values, batch.r, batch.done, cfg.gamma, entropy)

    def critic_step(self, batch, lr):
        values, cond = self._training_cond(len(batch))
        y = self.compute_target(batch, values, cond)
        x = with_cond(np.concatenate([batch.s, batch.a], axis=-1), cond)
        mse, grads = critic_loss(self.critics, x, y)
        adam_step(self.critics.online.params, grads, self.critics.opt, lr)
        self.critics.update_target(self.cfg.rho)
        return float(mse.mean())

    def actor_temp_step(self, s):
        """One actor update followed by one temperature update."""
        cfg = self.cfg
        _, cond = self._training_cond(len(s))
        if not self.is_sac:
            loss, grads = td3_actor_loss(self.actor, self.critics, s, cond)
            adam_step(self.actor.net.params, grads, self.actor.opt, cfg.actor_lr)
            return loss, 0.0, 0.0
        alpha = self.temp.alpha(cond)
        xi = self.rngs["policy"].standard_normal((len(s), self.act_dim))
        loss, grads, logp = sac_actor_loss(self.actor, self.critics, s, cond, alpha, xi)
        adam_step(self.actor.net.params, grads, self.actor.opt, cfg.actor_lr)
        t_loss, t_grads = temperature_loss(self.temp, cond, logp, self.target_entropy, cfg.temp_loss_form)
        t_params = self.temp.net.params if hasattr(self.temp, "net") else self.temp.params
        adam_step(t_params, t_grads, self.temp.opt, cfg.temp_lr)
        return loss, t_loss, float(np.mean(alpha))

    def train_step(self):
        """G critic updates (each followed by the EMA), then actor and temperature.

        The actor step reuses the states of the last critic minibatch.
        """
        cfg = self.cfg
        lr = warmup_lr(cfg.warmup, self.t)
        losses = []
        for _ in range(cfg.utd):
            batch = self.buffer.sample(cfg.batch_size, self.rngs["minibatch"])
            losses.append(self.critic_step(batch, lr))
        a_loss, t_loss, alpha = self.actor_temp_step(batch.s)
        self.n_updates += 1
        return UpdateInfo(float(np.mean(losses)), a_loss, t_loss, alpha, lr)

    # ------------------------------------------------------------ state

    def modules(self):
        mods = {"critics": self.critics, "actor": self.actor}
        if self.temp is not None:
            mods["temp"] = self.temp
        return mods

    def optimizers(self):
        return {name: mod.opt for name, mod in self.modules().items()}
