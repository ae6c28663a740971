import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from raclab.distributions import (
    BETA_EPS,
    BetaRange,
    SquashedGaussianParams,
    SubsetSizeRange,
    boltzmann_probs,
    boltzmann_select,
    clipped_gaussian_noise,
    deterministic_action,
    ensemble_mean_std,
    log1m_tanh_sq,
    random_subset_mask,
    random_subsets,
    sample_beta,
    sample_subset_sizes,
    squashed_log_prob,
    squashed_sample,
    squashed_sample_backward,
)
from raclab.errors import ConfigError, DivergenceError


def test_log_std_is_clipped():
    p = SquashedGaussianParams(np.zeros(3), np.array([-20.0, 0.5, 7.0]))
    assert np.array_equal(p.log_std, [-10.0, 0.5, 2.0])


def test_mode_density():
    a, logp, _ = squashed_sample(SquashedGaussianParams(np.zeros(1), np.zeros(1)), np.zeros(1))
    assert a[0] == 0.0
    assert logp == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-15)


def test_saturation_is_bounded():
    a, logp, _ = squashed_sample(SquashedGaussianParams(np.array([20.0]), np.array([-3.0])), np.array([0.3]))
    assert 0.999 < a[0] <= 1.0 and np.isfinite(logp)


def test_log1m_tanh_sq_matches_direct_formula_where_stable():
    u = np.linspace(-5, 5, 101)
    assert np.allclose(log1m_tanh_sq(u), np.log(1 - np.tanh(u) ** 2), atol=1e-10)
    assert np.isfinite(log1m_tanh_sq(np.array([400.0, -400.0]))).all()


def _mass(mu, log_std):
    """Integral of the squashed density over (-1, 1), done in pre-squash
    coordinates with the Jacobian da/du = 1/cosh(u)^2 computed independently."""
    std = np.exp(log_std)

    def integrand(u):
        return np.exp(squashed_log_prob(np.array([mu]), np.array([log_std]), np.array([u]))) / np.cosh(u) ** 2

    lo, hi = mu - 12 * std, mu + 12 * std
    return integrate.quad(integrand, lo, hi, points=[mu], limit=500, epsabs=1e-12, epsrel=1e-10)[0]


def test_density_integrates_to_one_on_random_pairs():
    rng = np.random.default_rng(0)
    for mu, log_std in zip(rng.uniform(-3, 3, 100), rng.uniform(-10, 2, 100)):
        assert _mass(mu, log_std) == pytest.approx(1.0, abs=1e-3)


def test_log_likelihood_matches_change_of_variables_oracle():
    """Density at a = d/da P(tanh(U) <= a), from the Gaussian CDF by central differences."""
    rng = np.random.default_rng(1)
    for _ in range(100):
        mu, log_std, z = rng.uniform(-1.5, 1.5), rng.uniform(-3, 1), rng.uniform(-2.5, 2.5)
        std = np.exp(log_std)
        u = mu + std * z
        a = np.tanh(u)
        h = 1e-6 * (1 - a * a)
        cdf = lambda x: stats.norm.cdf(np.arctanh(x), loc=mu, scale=std)
        dens = (cdf(a + h) - cdf(a - h)) / (2 * h)
        ours = squashed_log_prob(np.array([mu]), np.array([log_std]), np.array([u]))
        assert ours == pytest.approx(np.log(dens), abs=1e-6)


def test_log_prob_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(20):
        mu, ls, xi = rng.normal(size=3), rng.uniform(-2, 1, 3), rng.normal(size=3)
        ga = rng.normal(size=3)

        def f(mu, ls):
            a, lp, _ = squashed_sample(SquashedGaussianParams(mu, ls), xi)
            return float(np.sum(ga * a) + 0.7 * lp)

        a, lp, pre = squashed_sample(SquashedGaussianParams(mu, ls), xi)
        gm, gs = squashed_sample_backward(SquashedGaussianParams(mu, ls), xi, pre, ga, 0.7)
        for i in range(3):
            e = np.eye(3)[i] * 1e-6
            assert gm[i] == pytest.approx((f(mu + e, ls) - f(mu - e, ls)) / 2e-6, rel=1e-5, abs=1e-8)
            assert gs[i] == pytest.approx((f(mu, ls + e) - f(mu, ls - e)) / 2e-6, rel=1e-5, abs=1e-8)


def test_deterministic_action():
    assert deterministic_action(SquashedGaussianParams(np.zeros(2), np.zeros(2))).tolist() == [0.0, 0.0]
    assert deterministic_action(SquashedGaussianParams(np.array([20.0]), np.zeros(1)))[0] == pytest.approx(1.0)
    p = SquashedGaussianParams(np.array([0.3, -1.2]), np.array([0.1, -0.4]))
    assert np.array_equal(deterministic_action(p), squashed_sample(p, np.zeros(2))[0])


def test_clipped_noise_bounds_and_scale():
    rng = np.random.default_rng(3)
    x = clipped_gaussian_noise(0.2, 0.5, 100_000, rng)
    assert np.all(np.abs(x) <= 0.5)
    raw = np.random.default_rng(3).normal(0.0, 0.2, 100_000)  # the same draws before clipping
    assert np.std(raw) == pytest.approx(0.2, rel=0.02)
    assert np.array_equal(np.clip(raw, -0.5, 0.5), x)
    assert np.abs(clipped_gaussian_noise(1e-12, 0.5, 1000, rng)).max() < 1e-9
    with pytest.raises(ConfigError):
        clipped_gaussian_noise(0.0, 0.5, 3, rng)


def test_boltzmann_probabilities():
    assert boltzmann_probs([1.0, 0.0], 0.1)[0] == pytest.approx(1 / (1 + np.exp(-10)), rel=1e-12)
    assert np.allclose(boltzmann_probs([0.3, 0.3, 0.3], 0.1), 1 / 3)
    assert boltzmann_probs([1.0, 0.0], 100.0)[0] == pytest.approx(0.5025, abs=1e-4)
    with pytest.raises(DivergenceError):
        boltzmann_probs([np.nan, 0.0], 0.1)
    with pytest.raises(ConfigError):
        boltzmann_probs([1.0, 0.0], 0.0)


def test_boltzmann_select_frequencies():
    rng = np.random.default_rng(4)
    q = np.array([0.1, 0.0, 0.25])
    p = boltzmann_probs(q, 0.1)
    draws = np.array([boltzmann_select(q, 0.1, rng) for _ in range(100_000)])
    assert np.allclose(np.bincount(draws, minlength=3) / len(draws), p, atol=0.01)


def test_ensemble_mean_std_examples():
    assert ensemble_mean_std(np.full(4, 2.5)) == (2.5, 0.0)
    m, s = ensemble_mean_std(np.array([1.0, 2.0, 3.0]))
    assert (m, s) == (2.0, 1.0)
    m, s = ensemble_mean_std(np.array([2.0, 4.0]))
    assert m == 3.0 and s == pytest.approx(np.sqrt(2.0), rel=1e-15)
    with pytest.raises(ConfigError):
        ensemble_mean_std(np.array([1.0]))


@settings(max_examples=100, deadline=None)
@given(vals=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=10), c=st.floats(-1e3, 1e3))
def test_ensemble_shift_invariance(vals, c):
    v = np.array(vals)
    m0, s0 = ensemble_mean_std(v)
    m1, s1 = ensemble_mean_std(v + c)
    assert m1 == pytest.approx(m0 + c, abs=1e-9)
    assert s1 == pytest.approx(s0, abs=1e-9)


def test_beta_range_sampling():
    rng = np.random.default_rng(5)
    r = BetaRange(0.8)
    assert r.left == BETA_EPS
    x = sample_beta(r, rng, 100_000)
    assert x.min() >= BETA_EPS and x.max() <= 0.8
    assert x.mean() == pytest.approx((0.8 + BETA_EPS) / 2, rel=0.01)
    tiny = BetaRange(BETA_EPS + 1e-12)
    assert np.allclose(sample_beta(tiny, rng, 100), BETA_EPS, atol=1e-11)
    with pytest.raises(ConfigError):
        BetaRange(0.5, 0.8)
    with pytest.raises(ConfigError):
        BetaRange(0.5, 0.0)


def test_subset_size_range():
    rng = np.random.default_rng(6)
    x = SubsetSizeRange(1.5).sample(rng, 10_000)
    assert x.min() >= 1.0 and x.max() <= 1.5
    with pytest.raises(ConfigError):
        SubsetSizeRange(0.9, 0.5)


@pytest.mark.parametrize("k", [1.0, 1.3, 1.5, 1.9])
def test_subset_size_frequencies(k):
    rng = np.random.default_rng(7)
    sizes = sample_subset_sizes(np.full(100_000, k), rng)
    p = k - np.floor(k)
    assert set(np.unique(sizes)) <= {1, 2}
    assert np.mean(sizes == 2) == pytest.approx(p, abs=0.01)


def test_integer_k_always_two_distinct_members():
    rng = np.random.default_rng(8)
    sizes = sample_subset_sizes(np.full(1000, 2.0), rng)
    assert np.all(sizes == 2)
    mask = random_subset_mask(sizes, 5, rng)
    assert np.all(mask.sum(axis=1) == 2)


def test_random_subsets_distinct_and_uniform():
    rng = np.random.default_rng(9)
    idx = random_subsets(50_000, 2, 10, rng)
    assert np.all(idx[:, 0] != idx[:, 1])
    freq = np.bincount(idx.ravel(), minlength=10) / idx.size
    assert np.allclose(freq, 0.1, atol=0.005)
    with pytest.raises(ConfigError):
        random_subsets(3, 11, 10, rng)
