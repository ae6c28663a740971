"""Dense numeric kernel: MLPs with explicit backprop, Adam and the critic
learning-rate warm-up.

Everything is float64. A :class:`DenseNet` may hold a stack of ``E``
independent networks (``ensemble=E``) so that a whole critic ensemble runs
through one batched matmul per layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from raclab.errors import ConfigError, DivergenceError, UsageError

_OUTPUT_ACTIVATIONS = ("identity", "tanh")


def kaiming_uniform(rng, fan_out, fan_in, ensemble=None):
    """Weights ~ U(-b, b) with b = sqrt(2) * sqrt(3 / fan_in) (ReLU gain)."""
    bound = np.sqrt(6.0 / fan_in)
    shape = (fan_out, fan_in) if ensemble is None else (ensemble, fan_out, fan_in)
    return rng.uniform(-bound, bound, size=shape)


class DenseNet:
    """Feedforward ReLU network with a configurable output activation.

    ``sizes`` lists layer widths from input to output, e.g. ``(7, 256, 256, 1)``.
    Weights are stored ``[out, in]`` (``[E, out, in]`` for ensembles) and
    biases ``[out]`` (``[E, 1, out]``).
    """

    def __init__(self, sizes, output_activation="identity", ensemble=None, rng=None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ConfigError(f"invalid layer sizes {sizes}")
        if output_activation not in _OUTPUT_ACTIVATIONS:
            raise ConfigError(f"unknown output activation {output_activation!r}")
        if ensemble is not None and ensemble < 1:
            raise ConfigError("ensemble size must be >= 1")
        self.sizes = sizes
        self.output_activation = output_activation
        self.ensemble = ensemble
        rng = np.random.default_rng() if rng is None else rng
        self.params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self.params.append(kaiming_uniform(rng, fan_out, fan_in, ensemble))
            bshape = (fan_out,) if ensemble is None else (ensemble, 1, fan_out)
            self.params.append(np.zeros(bshape))
        self._cache = None

    @property
    def n_layers(self):
        return len(self.params) // 2

    @property
    def in_dim(self):
        return self.sizes[0]

    @property
    def out_dim(self):
        return self.sizes[-1]

    def copy(self):
        clone = DenseNet.__new__(DenseNet)
        clone.sizes = self.sizes
        clone.output_activation = self.output_activation
        clone.ensemble = self.ensemble
        clone.params = [p.copy() for p in self.params]
        clone._cache = None
        return clone

    def set_params(self, params):
        for dst, src in zip(self.params, params):
            dst[...] = src

    def forward(self, x, cache=True):
        """Run the network on ``x`` of shape ``[..., B, in]`` (or ``[in]``).

        With ``cache=True`` the activations are kept for :meth:`backward`.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ConfigError(
                f"input has trailing dim {x.shape[-1]}, network expects {self.in_dim}"
            )
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        inputs, pre_acts = [], []
        last = self.n_layers - 1
        for i in range(self.n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            inputs.append(h)
            z = h @ np.swapaxes(W, -1, -2) + b
            pre_acts.append(z)
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.output_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
        if cache:
            self._cache = (x.ndim, squeeze, inputs, pre_acts, h)
        return h[0] if squeeze else h

    def backward(self, grad_out):
        """Gradients of ``sum(output * grad_out)`` for every parameter and the input.

        Returns ``(param_grads, input_grad)`` with ``param_grads`` aligned to
        :attr:`params`. ReLU uses subgradient 0 at 0.
        """
        if self._cache is None:
            raise UsageError("backward called without a cached forward pass")
        in_ndim, squeeze, inputs, pre_acts, out = self._cache
        g = np.asarray(grad_out, dtype=np.float64)
        if squeeze:
            g = g[None, :]
        if g.shape != out.shape:
            raise ConfigError(f"upstream grad shape {g.shape} != output shape {out.shape}")
        if self.output_activation == "tanh":
            g = g * (1.0 - out * out)
        grads = [None] * len(self.params)
        for i in range(self.n_layers - 1, -1, -1):
            W = self.params[2 * i]
            x = inputs[i]
            gW = np.swapaxes(g, -1, -2) @ x
            if self.ensemble is None:
                gb = g.sum(axis=-2)
                if gW.ndim > 2:
                    gW = gW.reshape(-1, *W.shape).sum(axis=0)
                    gb = gb.reshape(-1, W.shape[0]).sum(axis=0)
            else:
                gb = g.sum(axis=-2, keepdims=True)
            grads[2 * i] = gW
            grads[2 * i + 1] = gb
            g = g @ W
            if i > 0:
                g = g * (pre_acts[i - 1] > 0.0)
        # a shared 2-D input broadcast across the ensemble receives summed grads
        if self.ensemble is not None and in_ndim == 2 and g.ndim == 3:
            g = g.sum(axis=0)
        return grads, (g[0] if squeeze else g)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **kwargs):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kwargs)


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update, applied in place.

    Raises :class:`DivergenceError` on a non-finite gradient.
    """
    if len(params) != len(grads):
        raise ConfigError("params and grads differ in length")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise ConfigError(f"grad shape {np.shape(g)} != param shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite gradient passed to adam_step")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


@dataclass(frozen=True)
class WarmupSchedule:
    l_init: float = 3e-5
    l_target: float = 3e-4
    t_start: int = 5000
    t_target: int = 10000

    def __post_init__(self):
        if self.t_target <= self.t_start:
            raise ConfigError("warm-up requires t_target > t_start")


def warmup_lr(sched, t):
    """Linearly interpolate from ``l_init`` to ``l_target`` over [t_start, t_target]."""
    p = np.clip((t - sched.t_start) / (sched.t_target - sched.t_start), 0.0, 1.0)
    return float(sched.l_init * (1.0 - p) + p * sched.l_target)


def soft_update(target_params, online_params, rho):
    """EMA tracking: target <- rho * online + (1 - rho) * target."""
    for tp, op in zip(target_params, online_params):
        tp *= 1.0 - rho
        tp += rho * op


@dataclass
class Trainable:
    """A network bundled with its Adam state."""

    net: DenseNet
    opt: AdamState = field(default=None)

    def __post_init__(self):
        if self.opt is None:
            self.opt = AdamState.zeros_like(self.net.params)

    def step(self, grads, lr):
        adam_step(self.net.params, grads, self.opt, lr)
