import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fd_check
from raclab.errors import ConfigError, DivergenceError, UsageError
from raclab.numcore import AdamState, DenseNet, WarmupSchedule, adam_step, soft_update, warmup_lr


def test_zero_network_outputs_zero():
    net = DenseNet((3, 5, 2), rng=np.random.default_rng(0))
    for p in net.params:
        p[...] = 0.0
    assert np.array_equal(net.forward(np.array([1.0, -2.0, 3.0])), np.zeros(2))


def test_hand_set_121_network():
    net = DenseNet((1, 2, 1))
    net.set_params([np.array([[2.0], [-1.0]]), np.array([0.5, 0.25]), np.array([[3.0, 4.0]]), np.array([-1.0])])
    # hidden: relu(2*1+0.5)=2.5, relu(-1+0.25)=0 ; out: 3*2.5 + 4*0 - 1
    assert net.forward(np.array([1.0]))[0] == pytest.approx(6.5, abs=1e-15)


def test_critic_layout_accepts_state_action_logbeta():
    obs_dim, act_dim = 4, 2
    net = DenseNet((obs_dim + act_dim + 1, 256, 256, 1), rng=np.random.default_rng(0))
    x = np.concatenate([np.ones((3, obs_dim)), np.zeros((3, act_dim)), np.log(np.full((3, 1), 0.3))], axis=1)
    assert net.forward(x).shape == (3, 1)


def test_shape_mismatch_is_config_error():
    net = DenseNet((3, 4, 1), rng=np.random.default_rng(0))
    with pytest.raises(ConfigError):
        net.forward(np.ones(2))


def test_kaiming_bounds_and_zero_biases():
    net = DenseNet((16, 64, 8), rng=np.random.default_rng(1), ensemble=3)
    for i, (fan_in, fan_out) in enumerate([(16, 64), (64, 8)]):
        W, b = net.params[2 * i], net.params[2 * i + 1]
        assert W.shape == (3, fan_out, fan_in)
        assert np.abs(W).max() <= np.sqrt(6.0 / fan_in)
        assert np.abs(W).max() > 0.9 * np.sqrt(6.0 / fan_in)
        assert not b.any()


def test_identity_layer_gradients():
    net = DenseNet((3, 1))
    net.set_params([np.ones((1, 3)), np.zeros(1)])
    x = np.array([0.5, -1.0, 2.0])
    net.forward(x)
    grads, gx = net.backward(np.array([1.0]))
    assert np.array_equal(grads[0], x[None, :])
    assert np.array_equal(grads[1], np.ones(1))
    assert np.array_equal(gx, np.ones(3))


def test_backward_without_forward_is_usage_error():
    net = DenseNet((2, 2), rng=np.random.default_rng(0))
    with pytest.raises(UsageError):
        net.backward(np.ones(2))


def test_relu_subgradient_at_zero_is_zero():
    net = DenseNet((1, 1, 1))
    net.set_params([np.array([[1.0]]), np.zeros(1), np.array([[1.0]]), np.zeros(1)])
    net.forward(np.array([0.0]))
    grads, gx = net.backward(np.array([1.0]))
    assert grads[0][0, 0] == 0.0 and gx[0] == 0.0


@pytest.mark.parametrize("ensemble,act", [(None, "identity"), (None, "tanh"), (3, "identity")])
def test_backward_matches_finite_differences(ensemble, act):
    rng = np.random.default_rng(2)
    net = DenseNet((4, 6, 5, 2), output_activation=act, ensemble=ensemble, rng=rng)
    for p in net.params:
        p += rng.normal(0, 0.1, p.shape)  # nonzero biases exercise their gradients
    x = rng.normal(size=(7, 4))
    w = rng.normal(size=net.forward(x, cache=False).shape)

    def loss():
        return float(np.sum(net.forward(x, cache=False) * w))

    net.forward(x)
    grads, gx = net.backward(w)
    assert fd_check(loss, net.params, grads, rng) <= 1e-4
    # input gradient
    x0 = x.copy()
    i, j = 3, 2
    x[i, j] = x0[i, j] + 1e-5
    up = loss()
    x[i, j] = x0[i, j] - 1e-5
    down = loss()
    x[i, j] = x0[i, j]
    assert gx[i, j] == pytest.approx((up - down) / 2e-5, rel=1e-4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_forward_is_deterministic(seed):
    rng = np.random.default_rng(seed)
    net = DenseNet((3, 8, 2), rng=rng)
    x = rng.normal(size=(5, 3))
    assert np.array_equal(net.forward(x), net.forward(x))


def test_adam_single_step_oracle():
    p = [np.zeros(1)]
    state = AdamState.zeros_like(p)
    adam_step(p, [np.ones(1)], state, 1e-3)
    # m_hat = v_hat = 1  ->  step = lr * 1 / (1 + 1e-8)
    assert p[0][0] == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-12)
    assert state.t == 1


def test_adam_two_steps_scalar_oracle():
    p = [np.zeros(1)]
    state = AdamState.zeros_like(p)
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    theta, m, v = 0.0, 0.0, 0.0
    for t in (1, 2):
        adam_step(p, [np.ones(1)], state, lr)
        m = b1 * m + (1 - b1) * 1.0
        v = b2 * v + (1 - b2) * 1.0
        theta -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    assert p[0][0] == pytest.approx(theta, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), steps=st.integers(1, 5))
def test_adam_zero_gradient_is_identity(seed, steps):
    rng = np.random.default_rng(seed)
    p = [rng.normal(size=(3, 2)), rng.normal(size=4)]
    before = [q.copy() for q in p]
    state = AdamState.zeros_like(p)
    for _ in range(steps):
        adam_step(p, [np.zeros_like(q) for q in p], state, 1e-2)
    assert all(np.array_equal(a, b) for a, b in zip(p, before))
    assert state.t == steps


def test_adam_non_finite_gradient_aborts():
    p = [np.zeros(2)]
    with pytest.raises(DivergenceError):
        adam_step(p, [np.array([1.0, np.nan])], AdamState.zeros_like(p), 1e-3)


def test_warmup_values():
    s = WarmupSchedule(3e-5, 3e-4, 5000, 10000)
    assert warmup_lr(s, 5000) == pytest.approx(3e-5)
    assert warmup_lr(s, 10000) == pytest.approx(3e-4)
    assert warmup_lr(s, 50000) == pytest.approx(3e-4)
    assert warmup_lr(s, 7500) == pytest.approx(1.65e-4)
    assert warmup_lr(s, 0) == pytest.approx(3e-5)


def test_warmup_rejects_bad_window():
    with pytest.raises(ConfigError):
        WarmupSchedule(3e-5, 3e-4, 10, 10)


@settings(max_examples=50, deadline=None)
@given(t1=st.integers(0, 20000), t2=st.integers(0, 20000))
def test_warmup_monotone_and_bounded(t1, t2):
    s = WarmupSchedule(3e-5, 3e-4, 5000, 10000)
    lo, hi = sorted((t1, t2))
    assert warmup_lr(s, lo) <= warmup_lr(s, hi)
    assert 3e-5 <= warmup_lr(s, t1) <= 3e-4


def test_soft_update_contracts_geometrically():
    online = [np.array([1.0, -2.0])]
    target = [np.zeros(2)]
    rho = 0.005
    gap0 = np.abs(online[0] - target[0]).max()
    for k in range(1, 101):
        soft_update(target, online, rho)
        assert np.abs(online[0] - target[0]).max() == pytest.approx(gap0 * (1 - rho) ** k, rel=1e-10)
