"""Function approximators used by the deep agents.

Conditioning on beta (or the subset size k) is a single extra input column
holding its logarithm, appended after the state (actor, temperature) or after
the state-action pair (critics).
"""
from __future__ import annotations

import numpy as np

from raclab.distributions import SquashedGaussianParams
from raclab.numcore import AdamState, DenseNet, soft_update


def with_cond(x, cond):
    """Append the log-scaled conditioning column to ``x`` (no-op for ``None``)."""
    if cond is None:
        return x
    cond = np.broadcast_to(np.asarray(cond, dtype=np.float64), x.shape[:-1])
    return np.concatenate([x, cond[..., None]], axis=-1)


class CriticEnsemble:
    """N critics evaluated in one batched pass, plus their EMA target copies."""

    def __init__(self, in_dim, hidden, n, rng):
        self.online = DenseNet((in_dim, *hidden, 1), ensemble=n, rng=rng)
        self.target = self.online.copy()
        self.opt = AdamState.zeros_like(self.online.params)

    @property
    def n(self):
        return self.online.ensemble

    def values(self, x, cache=True):
        """Online values ``[N, B]`` for inputs ``[B, in]``."""
        return self.online.forward(x, cache=cache)[..., 0]

    def target_values(self, x):
        return self.target.forward(x, cache=False)[..., 0]

    def update_target(self, rho):
        soft_update(self.target.params, self.online.params, rho)

    def arrays(self):
        return {"online": self.online.params, "target": self.target.params,
                "adam_m": self.opt.m, "adam_v": self.opt.v}


class GaussianActor:
    """State (plus log beta) to a tanh-squashed diagonal Gaussian."""

    def __init__(self, in_dim, act_dim, hidden, rng):
        self.act_dim = act_dim
        self.net = DenseNet((in_dim, *hidden, 2 * act_dim), rng=rng)
        self.opt = AdamState.zeros_like(self.net.params)

    def dist(self, x, cache=True):
        """Returns ``(params, raw_log_std)``; ``params.log_std`` is clipped."""
        out = self.net.forward(x, cache=cache)
        mean, raw = out[..., : self.act_dim], out[..., self.act_dim:]
        return SquashedGaussianParams(mean, raw), raw

    def deterministic(self, x):
        params, _ = self.dist(x, cache=False)
        return np.tanh(params.mean)

    def arrays(self):
        return {"params": self.net.params, "adam_m": self.opt.m, "adam_v": self.opt.v}


class DeterministicActor:
    """State (plus log beta) to an action in (-1, 1) through a final tanh."""

    def __init__(self, in_dim, act_dim, hidden, rng):
        self.act_dim = act_dim
        self.net = DenseNet((in_dim, *hidden, act_dim), output_activation="tanh", rng=rng)
        self.opt = AdamState.zeros_like(self.net.params)

    def action(self, x, cache=True):
        return self.net.forward(x, cache=cache)

    def deterministic(self, x):
        return self.action(x, cache=False)

    def arrays(self):
        return {"params": self.net.params, "adam_m": self.opt.m, "adam_v": self.opt.v}


class TemperatureNet:
    """alpha(beta) = exp(T(log beta) + xi) with a one-hidden-layer T.

    The output layer starts at zero so that alpha = exp(xi) for every beta at
    initialization. With Kaiming-scaled output weights, inputs near
    log(1e-7) = -16 would otherwise start T anywhere in roughly [-20, 20].

    ``input_scale`` multiplies log beta before the first layer. It is a
    reparameterization of the first-layer weights (same function class) that
    shrinks the per-step change of T at very small beta; 1.0 feeds log beta
    unchanged.
    """

    def __init__(self, hidden, xi, rng, input_scale=1.0):
        self.xi = float(xi)
        self.input_scale = float(input_scale)
        self.net = DenseNet((1, hidden, 1), rng=rng)
        self.net.params[2][...] = 0.0
        self.opt = AdamState.zeros_like(self.net.params)

    def log_alpha(self, cond, cache=False):
        cond = np.asarray(cond, dtype=np.float64)
        return self.net.forward(self.input_scale * cond[..., None], cache=cache)[..., 0] + self.xi

    def alpha(self, cond):
        return np.exp(self.log_alpha(cond))

    def arrays(self):
        return {"params": self.net.params, "adam_m": self.opt.m, "adam_v": self.opt.v}


class ScalarTemperature:
    """A single learned log alpha shared by all states."""

    def __init__(self, log_alpha):
        self.params = [np.array([float(log_alpha)])]
        self.opt = AdamState.zeros_like(self.params)

    def log_alpha(self, cond=None, cache=False):
        return self.params[0][0]

    def alpha(self, cond=None):
        return float(np.exp(self.params[0][0]))

    def arrays(self):
        return {"params": self.params, "adam_m": self.opt.m, "adam_v": self.opt.v}
