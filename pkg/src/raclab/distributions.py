"""Policy distributions and sampling utilities.

All samplers take an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from raclab.errors import ConfigError, DivergenceError

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0
BETA_EPS = 1e-7
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def log1m_tanh_sq(u):
    """log(1 - tanh(u)^2) computed without cancellation."""
    u = np.asarray(u, dtype=np.float64)
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


@dataclass
class SquashedGaussianParams:
    """Pre-squash Gaussian mean and log std; ``log_std`` is stored clipped."""

    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.log_std = np.clip(np.asarray(self.log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)


def squashed_sample(params, xi):
    """Reparameterized sample ``tanh(mean + std * xi)`` and its log-likelihood.

    The log-likelihood sums over the last axis. Returns ``(action, log_prob, pre)``
    where ``pre`` is the pre-squash sample (needed by
    :func:`squashed_sample_backward`).
    """
    xi = np.asarray(xi, dtype=np.float64)
    std = np.exp(params.log_std)
    pre = params.mean + std * xi
    action = np.tanh(pre)
    log_prob = np.sum(-0.5 * xi * xi - params.log_std - _HALF_LOG_2PI - log1m_tanh_sq(pre), axis=-1)
    return action, log_prob, pre


def squashed_log_prob(mean, log_std, pre):
    """Log-density of the squashed Gaussian at the action ``tanh(pre)``."""
    log_std = np.clip(np.asarray(log_std, dtype=np.float64), LOG_STD_MIN, LOG_STD_MAX)
    z = (np.asarray(pre) - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z * z - log_std - _HALF_LOG_2PI - log1m_tanh_sq(pre), axis=-1)


def squashed_sample_backward(params, xi, pre, grad_action, grad_log_prob):
    """Chain rule for :func:`squashed_sample` with ``xi`` held fixed.

    ``grad_action`` has the action's shape, ``grad_log_prob`` the log-prob's.
    Returns gradients w.r.t. ``(mean, log_std)`` (the clipped value; callers
    mask the clip themselves).
    """
    a = np.tanh(pre)
    glp = np.asarray(grad_log_prob, dtype=np.float64)[..., None]
    # d/du [-log(1 - tanh(u)^2)] = 2 tanh(u)
    g_pre = grad_action * (1.0 - a * a) + glp * 2.0 * a
    g_mean = g_pre
    g_log_std = g_pre * np.exp(params.log_std) * xi - glp
    return g_mean, g_log_std


def deterministic_action(params):
    return np.tanh(params.mean)


def clipped_gaussian_noise(sigma, clip, size, rng):
    if sigma <= 0 or clip <= 0:
        raise ConfigError("sigma and clip must be positive")
    return np.clip(rng.normal(0.0, sigma, size=size), -clip, clip)


def boltzmann_probs(q_values, temperature):
    q = np.asarray(q_values, dtype=np.float64)
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    if not np.all(np.isfinite(q)):
        raise DivergenceError("non-finite action values in Boltzmann selection")
    z = q / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def boltzmann_select(q_values, temperature, rng):
    p = boltzmann_probs(q_values, temperature)
    return int(np.searchsorted(np.cumsum(p), rng.random(), side="right").clip(0, len(p) - 1))


def ensemble_mean_std(values, axis=0):
    """Mean and Bessel-corrected std over the ensemble axis."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[axis]
    if n < 2:
        raise ConfigError("ensemble statistics need at least 2 members")
    mean = values.mean(axis=axis)
    dev = values - np.expand_dims(mean, axis)
    std = np.sqrt(np.sum(dev * dev, axis=axis) / (n - 1))
    return mean, std


@dataclass(frozen=True)
class BetaRange:
    """Uniform range over the punishment weight; fed to networks as log(beta).

    ``left == right`` collapses the range to a single value.
    """

    right: float
    left: float = BETA_EPS

    def __post_init__(self):
        if not 0 < self.left <= self.right:
            raise ConfigError(f"need 0 < left <= right, got [{self.left}, {self.right}]")

    def sample(self, rng, size=None):
        return rng.uniform(self.left, self.right, size=size)

    @staticmethod
    def encode(beta):
        return np.log(beta)


@dataclass(frozen=True)
class SubsetSizeRange:
    """Uniform range over the fractional in-target subset size k."""

    right: float
    left: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.left <= self.right:
            raise ConfigError(f"need 1 <= left <= right, got [{self.left}, {self.right}]")

    def sample(self, rng, size=None):
        return rng.uniform(self.left, self.right, size=size)

    @staticmethod
    def encode(k):
        return np.log(k)


def sample_beta(beta_range, rng, size=None):
    return beta_range.sample(rng, size)


def sample_subset_sizes(k, rng):
    """floor(k) + Bernoulli(k - floor(k)), elementwise."""
    k = np.asarray(k, dtype=np.float64)
    base = np.floor(k)
    return (base + (rng.random(k.shape) < (k - base))).astype(np.int64)


def random_subset_mask(sizes, n, rng):
    """Boolean mask ``[B, n]`` choosing ``sizes[b]`` distinct members per row."""
    sizes = np.asarray(sizes)
    if np.any(sizes > n) or np.any(sizes < 1):
        raise ConfigError(f"subset sizes must lie in [1, {n}]")
    ranks = np.argsort(rng.random((sizes.shape[0], n)), axis=1).argsort(axis=1)
    return ranks < sizes[:, None]


def random_subsets(batch, size, n, rng):
    """Indices ``[batch, size]`` of ``size`` distinct members per row."""
    if not 1 <= size <= n:
        raise ConfigError(f"subset size must lie in [1, {n}]")
    keys = rng.random((batch, n))
    if size == n:
        return np.broadcast_to(np.arange(n), (batch, n))
    return np.argpartition(keys, size - 1, axis=1)[:, :size]
