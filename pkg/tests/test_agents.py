import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raclab.agents import (
    AgentConfig,
    RacAgent,
    critic_loss,
    intarget_target,
    load_agent,
    punished_target,
    sac_actor_loss,
    save_agent,
    td3_actor_loss,
    temperature_loss,
)
from raclab.agents.networks import CriticEnsemble, GaussianActor, TemperatureNet
from raclab.errors import ConfigError

TINY = dict(n_critics=3, utd=2, hidden=(6, 6), temp_hidden=4, batch_size=8, random_steps=20, capacity=200)


def _filled(variant, seed=0, steps=40, **kw):
    agent = RacAgent(AgentConfig(variant=variant, **{**TINY, **kw}), 2, 1, seed=seed)
    rng = np.random.default_rng(seed + 100)
    for _ in range(steps):
        s = rng.normal(size=2)
        agent.observe(s, rng.uniform(-1, 1, 1), float(rng.normal()), s + 0.1, bool(rng.random() < 0.05))
    return agent


# ------------------------------------------------------------------ targets

def test_target_reduces_to_one_step_backup():
    q = np.full((4, 3), 2.5)
    y = punished_target(q, 0.0, np.array([1.0, 0.0, -1.0]), np.zeros(3), 0.9)
    assert np.array_equal(y, np.array([1.0, 0.0, -1.0]) + 0.9 * 2.5)


def test_target_worked_example_and_terminal_cut():
    q = np.array([[2.0], [4.0]])
    y = punished_target(q, 0.5, np.array([1.0]), np.zeros(1), 0.99, entropy=np.zeros(1))
    assert y[0] == pytest.approx(1 + 0.99 * (3 - 0.5 * np.sqrt(2)), abs=1e-12)
    assert punished_target(q, 0.5, np.array([1.0]), np.ones(1), 0.99)[0] == 1.0


def test_td3_target_matches_sac_target_without_entropy():
    q = np.array([[2.0], [4.0]])
    sac = punished_target(q, 0.5, np.array([1.0]), np.zeros(1), 0.99, entropy=np.zeros(1))
    td3 = punished_target(q, 0.5, np.array([1.0]), np.zeros(1), 0.99)
    assert np.array_equal(sac, td3)


def test_entropy_term_enters_with_negative_sign():
    q = np.full((2, 1), 1.0)
    y = punished_target(q, 0.0, np.zeros(1), np.zeros(1), 0.5, entropy=np.array([0.4]))
    assert y[0] == pytest.approx(0.5 * (1.0 - 0.4))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), b1=st.floats(0, 5), b2=st.floats(0, 5))
def test_target_monotone_in_beta(seed, b1, b2):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(5, 4))
    r, d = rng.normal(size=4), np.zeros(4)
    lo, hi = sorted((b1, b2))
    y_lo, y_hi = punished_target(q, lo, r, d, 0.99), punished_target(q, hi, r, d, 0.99)
    assert np.all(y_hi <= y_lo)
    if hi > lo + 1e-6:
        assert np.all(y_hi < y_lo)  # std > 0 almost surely


def test_intarget_target_min_over_subset():
    q = np.array([[1.0, 5.0], [3.0, 2.0], [0.5, 4.0]])
    mask = np.array([[True, True, False], [False, True, True]])
    y = intarget_target(q, mask, np.zeros(2), np.zeros(2), 1.0)
    assert np.array_equal(y, [1.0, 2.0])


def test_intarget_subset_larger_than_ensemble_rejected():
    with pytest.raises(ConfigError):
        AgentConfig(variant="rac-intarget", n_critics=2, u1_right=3.0)


def test_non_finite_target_aborts():
    from raclab.errors import DivergenceError

    with pytest.raises(DivergenceError), np.errstate(invalid="ignore"):
        punished_target(np.array([[np.inf], [1.0]]), 0.1, np.zeros(1), np.zeros(1), 0.9)


# ------------------------------------------------------------------ losses

def test_critic_loss_zero_at_target():
    rng = np.random.default_rng(0)
    critics = CriticEnsemble(3, (4,), 2, rng)
    x = rng.normal(size=(5, 3))
    # make both members identical so Q_i == y exactly
    for p in critics.online.params:
        p[1] = p[0]
    y = critics.values(x, cache=False)[0]
    mse, grads = critic_loss(critics, x, y)
    assert np.allclose(mse, 0.0, atol=1e-28)
    assert all(np.allclose(g, 0.0, atol=1e-14) for g in grads)


def test_critic_loss_two_element_oracle():
    rng = np.random.default_rng(1)
    critics = CriticEnsemble(2, (3,), 2, rng)
    x = rng.normal(size=(2, 2))
    q = critics.values(x, cache=False)
    y = np.array([0.3, -0.2])
    mse, _ = critic_loss(critics, x, y)
    for i in range(2):
        assert mse[i] == pytest.approx(((q[i, 0] - 0.3) ** 2 + (q[i, 1] + 0.2) ** 2) / 2, rel=1e-14)


def _action_blind(critics, obs_dim):
    """Zero the first-layer weights on action columns so Q does not depend on a."""
    critics.online.params[0][:, :, obs_dim:obs_dim + 1] = 0.0


def test_sac_actor_gradient_reduces_to_entropy_term():
    rng = np.random.default_rng(2)
    actor = GaussianActor(2, 1, (5,), rng)
    critics = CriticEnsemble(3, (4,), 2, rng)
    _action_blind(critics, 2)
    s, xi, alpha = rng.normal(size=(6, 2)), rng.normal(size=(6, 1)), 0.3
    _, grads, _ = sac_actor_loss(actor, critics, s, None, alpha, xi)

    # the same gradient from an "entropy only" loss (critics contribute nothing)
    critics.online.params[-2][...] = 0.0
    critics.online.params[-1][...] = 0.0
    _, grads_entropy, _ = sac_actor_loss(actor, critics, s, None, alpha, xi)
    assert all(np.allclose(a, b, atol=1e-14) for a, b in zip(grads, grads_entropy))


def test_td3_actor_gradient_zero_for_action_blind_critics():
    from raclab.agents.networks import DeterministicActor

    rng = np.random.default_rng(3)
    actor = DeterministicActor(2, 1, (5,), rng)
    critics = CriticEnsemble(3, (4,), 2, rng)
    _action_blind(critics, 2)
    _, grads = td3_actor_loss(actor, critics, rng.normal(size=(6, 2)), None)
    assert all(not np.any(g) for g in grads)


def test_temperature_stationary_when_entropy_on_target():
    rng = np.random.default_rng(4)
    temp = TemperatureNet(8, -5.0, rng)
    cond = np.log(rng.uniform(1e-7, 0.8, 10))
    for form in ("alpha", "log_alpha"):
        _, grads = temperature_loss(temp, cond, np.full(10, 1.0), -1.0, form)
        assert all(not np.any(g) for g in grads)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), beta=st.floats(1e-7, 10.0))
def test_temperature_positive(seed, beta):
    temp = TemperatureNet(8, -5.0, np.random.default_rng(seed))
    for p in temp.net.params:
        p += np.random.default_rng(seed).normal(0, 0.5, p.shape)
    assert temp.alpha(np.log(np.array([beta])))[0] > 0


def test_initial_temperature_is_exp_xi():
    temp = TemperatureNet(64, -5.0, np.random.default_rng(5))
    betas = np.log(np.array([1e-7, 0.01, 0.3, 0.8]))
    assert np.allclose(temp.alpha(betas), np.exp(-5.0), rtol=1e-15)
    assert np.exp(-5.0) == pytest.approx(6.738e-3, rel=1e-4)


def test_input_scale_is_a_first_layer_reparameterization():
    rng = np.random.default_rng(6)
    a, b = TemperatureNet(5, -5.0, rng), TemperatureNet(5, -5.0, rng, input_scale=0.25)
    for pa, pb in zip(a.net.params, b.net.params):
        pb += rng.normal(0, 0.5, pb.shape)
        pa[...] = pb
    a.net.params[0][...] = b.net.params[0] * 0.25
    cond = np.log(np.array([1e-5, 0.2]))
    assert np.allclose(a.log_alpha(cond), b.log_alpha(cond), rtol=1e-14)


# ------------------------------------------------------------------ agent

def test_defaults_follow_hyperparameter_tables():
    cfg = AgentConfig()
    assert (cfg.n_critics, cfg.utd, cfg.batch_size, cfg.gamma, cfg.rho) == (10, 20, 256, 0.99, 0.005)
    assert (cfg.random_steps, cfg.hidden, cfg.temp_hidden, cfg.xi) == (5000, (256, 256), 64, -5.0)
    assert (cfg.u1_left, cfg.u1_right, cfg.u2_left, cfg.u2_right) == (1e-7, 0.8, 1e-7, 0.3)
    assert (cfg.td3_sigma, cfg.td3_clip, cfg.td3_explore) == (0.2, 0.5, 0.1)
    assert cfg.vanilla_beta == 0.3 and cfg.vanilla_log_alpha == -3.0
    assert cfg.entropy_target(3) == -3.0
    it = AgentConfig(variant="rac-intarget")
    assert (it.u1_left, it.u1_right, it.u2_left, it.u2_right) == (1.0, 1.5, 1.0, 2.0)


@pytest.mark.parametrize("bad", [dict(n_critics=1), dict(utd=0), dict(capacity=4, batch_size=8),
                                 dict(variant="sac"), dict(gamma=1.0), dict(u1_left=0.9)])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ConfigError):
        AgentConfig(**{**TINY, **bad})


def test_random_phase_actions_uniform():
    agent = RacAgent(AgentConfig(**TINY), 2, 1, seed=0)
    acts = np.array([agent.act(np.zeros(2)) for _ in range(5)])
    assert np.all(np.abs(acts) <= 1)
    agent.t = 10**6
    for variant in ("rac-sac", "rac-td3"):
        ag = RacAgent(AgentConfig(variant=variant, **TINY), 2, 1, seed=0)
        ag.t = 10**6
        a = np.array([ag.act(np.ones(2)) for _ in range(50)])
        assert np.all(np.abs(a) <= 1)


def test_exploit_is_deterministic():
    agent = _filled("rac-sac")
    obs = np.random.default_rng(0).normal(size=(4, 2))
    assert np.array_equal(agent.policy(obs, 0.1), agent.policy(obs, 0.1))


@pytest.mark.parametrize("variant", ["rac-sac", "rac-td3", "vanilla-rac", "rac-intarget"])
def test_update_cadence(variant):
    agent = _filled(variant)
    for _ in range(3):
        agent.train_step()
    assert agent.critics.opt.t == 3 * TINY["utd"]
    assert agent.actor.opt.t == 3
    if agent.temp is not None:
        assert agent.temp.opt.t == 3


def test_single_critic_update_applies_ema():
    agent = _filled("rac-sac", utd=1)
    prev = [p.copy() for p in agent.critics.target.params]
    agent.train_step()
    for tgt, onl, old in zip(agent.critics.target.params, agent.critics.online.params, prev):
        assert np.allclose(tgt, 0.005 * onl + 0.995 * old, rtol=1e-14, atol=1e-16)


def test_vanilla_target_matches_punished_target():
    agent = _filled("vanilla-rac")
    batch = agent.buffer.sample(8, np.random.default_rng(0))
    values, cond = agent._training_cond(8)
    assert cond is None and np.all(values == 0.3)
    state = agent.rngs["policy"].bit_generator.state
    y = agent.compute_target(batch, values, cond)
    agent.rngs["policy"].bit_generator.state = state
    from raclab.agents.networks import with_cond
    from raclab.distributions import squashed_sample

    params, _ = agent.actor.dist(batch.s2, cache=False)
    a2, logp, _ = squashed_sample(params, agent.rngs["policy"].standard_normal((8, 1)))
    q = agent.critics.target_values(with_cond(np.concatenate([batch.s2, a2], axis=-1), None))
    expected = punished_target(q, 0.3, batch.r, batch.done, 0.99, agent.temp.alpha() * logp)
    assert np.array_equal(y, expected)


@pytest.mark.parametrize("variant", ["rac-sac", "rac-td3", "vanilla-rac", "rac-intarget"])
def test_checkpoint_resumes_bit_identically(variant, tmp_path):
    a = _filled(variant, seed=3)
    a.train_step()
    path = str(tmp_path / "ck.npz")
    save_agent(path, a, {"note": "x"})
    b, extra = load_agent(path)
    assert extra == {"note": "x"}
    for _ in range(2):
        ia, ib = a.train_step(), b.train_step()
        assert ia == ib
    for pa, pb in zip(a.critics.online.params, b.critics.online.params):
        assert np.array_equal(pa, pb)
