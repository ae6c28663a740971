"""Hyperparameters shared by the deep agent variants."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from raclab.distributions import BETA_EPS, BetaRange, SubsetSizeRange
from raclab.errors import ConfigError
from raclab.numcore import WarmupSchedule

VARIANTS = ("rac-sac", "rac-td3", "vanilla-rac", "rac-intarget")

# (left, right) of the exploitation range U1 and exploration range U2 per variant
_RANGE_DEFAULTS = {
    "rac-sac": ((BETA_EPS, 0.8), (BETA_EPS, 0.3)),
    "rac-td3": ((BETA_EPS, 0.8), (BETA_EPS, 0.3)),
    "vanilla-rac": ((BETA_EPS, 0.8), (BETA_EPS, 0.3)),
    "rac-intarget": ((1.0, 1.5), (1.0, 2.0)),
}


@dataclass
class AgentConfig:
    """All knobs of one agent. ``None`` range edges resolve to variant defaults.

    ``eval_right`` is the right edge ``b`` of the evaluation grid; it defaults
    to the right edge of U2.
    """

    variant: str = "rac-sac"
    n_critics: int = 10
    hidden: tuple = (256, 256)
    temp_hidden: int = 64
    batch_size: int = 256
    gamma: float = 0.99
    rho: float = 0.005
    utd: int = 20
    random_steps: int = 5000
    capacity: int = 1_000_000
    actor_lr: float = 3e-4
    temp_lr: float = 3e-4
    critic_lr_init: float = 3e-5
    critic_lr_target: float = 3e-4
    lr_t_start: int = 5000
    lr_t_target: int = 10000
    u1_left: float | None = None
    u1_right: float | None = None
    u2_left: float | None = None
    u2_right: float | None = None
    xi: float = -5.0
    # log(beta) spans [log BETA_EPS, 0]; scaling it to unit range keeps Adam
    # steps on the temperature net commensurate across the whole beta range
    temp_input_scale: float = 1.0 / abs(math.log(BETA_EPS))
    temp_loss_form: str = "alpha"
    target_entropy: float | None = None
    td3_sigma: float = 0.2
    td3_clip: float = 0.5
    td3_explore: float = 0.1
    vanilla_beta: float = 0.3
    vanilla_log_alpha: float = -3.0
    eval_right: float | None = None
    eval_count: int = 12

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        (l1, r1), (l2, r2) = _RANGE_DEFAULTS[self.variant]
        self.u1_left = l1 if self.u1_left is None else float(self.u1_left)
        self.u1_right = r1 if self.u1_right is None else float(self.u1_right)
        self.u2_left = l2 if self.u2_left is None else float(self.u2_left)
        self.u2_right = r2 if self.u2_right is None else float(self.u2_right)
        self.validate()

    def validate(self):
        checks = [
            (self.n_critics >= 2, "n_critics must be >= 2"),
            (len(self.hidden) >= 1 and min(self.hidden) >= 1, "hidden sizes must be positive"),
            (self.temp_hidden >= 1, "temp_hidden must be positive"),
            (self.batch_size >= 1, "batch_size must be positive"),
            (0.0 <= self.gamma < 1.0, "gamma must lie in [0, 1)"),
            (0.0 < self.rho <= 1.0, "rho must lie in (0, 1]"),
            (self.utd >= 1, "utd must be >= 1"),
            (self.random_steps >= 0, "random_steps must be >= 0"),
            (self.capacity >= self.batch_size, "capacity must be >= batch_size"),
            (min(self.actor_lr, self.temp_lr, self.critic_lr_init, self.critic_lr_target) > 0,
             "learning rates must be positive"),
            (self.td3_sigma > 0 and self.td3_clip > 0 and self.td3_explore >= 0, "TD3 noise must be positive"),
            (self.vanilla_beta >= 0, "vanilla_beta must be >= 0"),
            (self.eval_count >= 1, "eval_count must be >= 1"),
            (self.temp_input_scale > 0, "temp_input_scale must be positive"),
            (self.temp_loss_form in ("alpha", "log_alpha"), "temp_loss_form must be alpha or log_alpha"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.variant == "rac-intarget":
            if self.u1_right > self.n_critics or self.u2_right > self.n_critics:
                raise ConfigError("in-target subset size range exceeds the ensemble size")
        # constructing the ranges validates their edges
        self.u1, self.u2
        self.warmup

    @property
    def conditioned(self):
        """Whether networks receive the log-scaled beta (or k) input."""
        return self.variant != "vanilla-rac"

    @property
    def u1(self):
        cls = SubsetSizeRange if self.variant == "rac-intarget" else BetaRange
        return cls(self.u1_right, self.u1_left)

    @property
    def u2(self):
        cls = SubsetSizeRange if self.variant == "rac-intarget" else BetaRange
        return cls(self.u2_right, self.u2_left)

    @property
    def warmup(self):
        return WarmupSchedule(self.critic_lr_init, self.critic_lr_target, self.lr_t_start, self.lr_t_target)

    def entropy_target(self, act_dim):
        return -float(act_dim) if self.target_entropy is None else float(self.target_entropy)

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["hidden"] = list(self.hidden)
        return out
