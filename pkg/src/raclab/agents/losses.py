"""Bootstrap targets and losses with hand-written gradients.

Every loss function returns the scalar loss together with gradients for the
parameters it trains, given all stochastic inputs (beta, reparameterization
noise, subset masks) as explicit arguments. That makes each one a pure
function of the parameters, which is what the finite-difference suite checks.
"""
from __future__ import annotations

import numpy as np

from raclab.agents.networks import with_cond
from raclab.distributions import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    ensemble_mean_std,
    squashed_sample,
    squashed_sample_backward,
)
from raclab.errors import ConfigError, DivergenceError


def _check_finite(y, what):
    if not np.all(np.isfinite(y)):
        bad = np.flatnonzero(~np.isfinite(np.ravel(y)))
        raise DivergenceError(f"non-finite {what} at flat indices {bad[:8].tolist()}",
                              state={"values": np.asarray(y)})
    return y


def punished_target(q_next, beta, r, done, gamma, entropy=None):
    """``r + gamma (1 - done) [mean_i q_i - beta std_i q_i - entropy]``.

    ``q_next`` is ``[N, B]`` from the target critics; ``beta`` is a scalar or
    ``[B]``; ``entropy`` is the per-element ``alpha * log pi`` term or ``None``.
    """
    mean, std = ensemble_mean_std(q_next, axis=0)
    v = mean - np.asarray(beta) * std
    if entropy is not None:
        v = v - entropy
    y = np.asarray(r) + gamma * (1.0 - np.asarray(done)) * v
    return _check_finite(y, "bootstrap target")


def intarget_target(q_next, mask, r, done, gamma, entropy=None):
    """Like :func:`punished_target` but bootstraps from the minimum over a
    member subset. ``mask`` is ``[B, N]`` (True = member used)."""
    sub_min = np.where(mask.T, q_next, np.inf).min(axis=0)
    v = sub_min if entropy is None else sub_min - entropy
    y = np.asarray(r) + gamma * (1.0 - np.asarray(done)) * v
    return _check_finite(y, "bootstrap target")


def critic_loss(critics, x, y):
    """Sum over members of each member's mean squared error to the shared target.

    Returns ``(per_member_mse [N], grads)``.
    """
    q = critics.values(x)
    diff = q - y[None, :]
    mse = np.mean(diff * diff, axis=1)
    grads, _ = critics.online.backward((2.0 / diff.shape[1]) * diff[..., None])
    return _check_finite(mse, "critic loss"), grads


def _mean_q_action_grad(critics, s, a, cond):
    """Mean online value over members and its gradient w.r.t. the action."""
    x = with_cond(np.concatenate([s, a], axis=-1), cond)
    q = critics.values(x)
    n, b = q.shape
    _, gx = critics.online.backward(np.full((n, b, 1), 1.0 / n))
    obs_dim = s.shape[-1]
    return q.mean(axis=0), gx[:, obs_dim:obs_dim + a.shape[-1]]


def sac_actor_loss(actor, critics, s, cond, alpha, xi):
    """``mean[alpha log pi(a|s) - mean_i Q_i(s, a)]`` with ``a`` reparameterized by ``xi``.

    ``alpha`` (per element or scalar) is held constant, and critic
    parameters are not trained here. Returns ``(loss, grads, log_prob)``.
    """
    params, raw = actor.dist(with_cond(s, cond))
    a, logp, pre = squashed_sample(params, xi)
    qmean, dq_da = _mean_q_action_grad(critics, s, a, cond)
    b = len(qmean)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), logp.shape)
    loss = float(np.mean(alpha * logp - qmean))
    g_mean, g_log_std = squashed_sample_backward(params, xi, pre, -dq_da / b, alpha / b)
    g_log_std = g_log_std * ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX))
    grads, _ = actor.net.backward(np.concatenate([g_mean, g_log_std], axis=-1))
    return _check_finite(loss, "actor loss"), grads, logp


def td3_actor_loss(actor, critics, s, cond):
    """``-mean_i Q_i(s, pi(s))`` averaged over the batch. Returns ``(loss, grads)``."""
    a = actor.action(with_cond(s, cond))
    qmean, dq_da = _mean_q_action_grad(critics, s, a, cond)
    grads, _ = actor.net.backward(-dq_da / len(qmean))
    return _check_finite(float(-np.mean(qmean)), "actor loss"), grads


def temperature_loss(temp, cond, log_prob, target_entropy, form="alpha"):
    """``mean[-alpha(cond) (log pi + target_entropy)]`` with ``log pi`` constant.

    ``form="log_alpha"`` replaces alpha by log alpha inside the mean. Both
    forms share their stationary points; the log form weights every element
    equally instead of in proportion to its alpha. Works for both
    :class:`TemperatureNet` and :class:`ScalarTemperature`.
    """
    slack = np.asarray(log_prob, dtype=np.float64) + target_entropy
    if hasattr(temp, "net"):
        log_alpha = temp.log_alpha(cond, cache=True)
    else:
        log_alpha = np.full(slack.shape, temp.params[0][0])
    if form == "alpha":
        weight = np.exp(log_alpha)
        loss = float(np.mean(-weight * slack))
    elif form == "log_alpha":
        weight = np.ones_like(slack)
        loss = float(np.mean(-log_alpha * slack))
    else:
        raise ConfigError(f"unknown temperature loss form {form!r}")
    # d loss / d log_alpha per element
    g = -weight * slack / len(slack)
    if hasattr(temp, "net"):
        grads, _ = temp.net.backward(g[:, None])
    else:
        grads = [np.array([g.sum()])]
    return _check_finite(loss, "temperature loss"), grads
