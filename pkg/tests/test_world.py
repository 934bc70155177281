import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sparse_active.errors import ParameterError
from sparse_active.world import (
    AdversaryStrategy,
    BoundedProfile,
    NoiseModel,
    RngState,
    SparseTarget,
    World,
    band_mass,
    boundary_band_width,
    gaussian,
    hash_unit,
    label,
    monte_carlo_band_mass,
    sample_target,
    sign,
    uniform_ball,
)


def _world(d=10, t=3, noise=None, dist=None, seed=0):
    rng = np.random.default_rng(seed)
    return World(dist or gaussian(d), sample_target(d, t, rng), noise or NoiseModel.realizable())


# RNG streams


def test_rng_state_is_reproducible():
    a = RngState(5, 1).generator().standard_normal(4)
    b = RngState(5, 1).generator().standard_normal(4)
    np.testing.assert_array_equal(a, b)
    c = RngState(5, 2).generator().standard_normal(4)
    assert not np.array_equal(a, c)


def test_rng_children_differ_by_parent():
    assert RngState(1, 0).child(0) != RngState(1, 1).child(0)


# marginals


@pytest.mark.parametrize("make", [gaussian, uniform_ball])
def test_marginal_is_isotropic(make):
    d = 6
    X = make(d).sample(200_000, np.random.default_rng(1))
    np.testing.assert_allclose(X.mean(axis=0), 0, atol=0.015)
    np.testing.assert_allclose(np.cov(X.T), np.eye(d), atol=0.03)


def test_uniform_ball_stays_in_ball():
    dist = uniform_ball(5)
    X = dist.sample(10_000, np.random.default_rng(2))
    assert np.linalg.norm(X, axis=1).max() <= dist.ball_radius


@pytest.mark.parametrize("d", [2, 7, 30])
def test_uniform_ball_projection_cdf_matches_samples(d):
    dist = uniform_ball(d)
    X = dist.sample(50_000, np.random.default_rng(d))
    proj = X[:, 0]
    res = stats.kstest(proj, dist.projection_cdf)
    assert res.pvalue > 1e-3


@pytest.mark.parametrize("make", [gaussian, uniform_ball])
def test_quantile_inverts_cdf(make):
    dist = make(9)
    p = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(dist.projection_cdf(dist.projection_quantile(p)), p, atol=1e-10)


# targets


def test_sample_target_is_sparse_unit():
    tgt = sample_target(50, 4, np.random.default_rng(3))
    assert np.count_nonzero(tgt.u) == 4
    assert np.linalg.norm(tgt.u) == pytest.approx(1.0, abs=1e-14)
    assert set(np.nonzero(tgt.u)[0]) == set(tgt.support)


def test_target_validation():
    with pytest.raises(ParameterError):
        SparseTarget(np.array([0.6, 0.6]), (0, 1), 2)
    with pytest.raises(ParameterError):
        SparseTarget(np.array([0.6, 0.8, 0.0]), (0,), 1)
    with pytest.raises(ParameterError):
        sample_target(3, 4, np.random.default_rng(0))


@settings(max_examples=50)
@given(st.integers(1, 40), st.data())
def test_target_support_size(d, data):
    t = data.draw(st.integers(1, d))
    tgt = sample_target(d, t, np.random.default_rng(d * 100 + t))
    assert len(tgt.support) == t
    assert np.count_nonzero(tgt.u) <= t


# labels


def test_sign_of_zero_is_positive():
    np.testing.assert_array_equal(sign([-2.0, 0.0, 3.0]), [-1, 1, 1])


def test_realizable_labels_match_target():
    w = _world()
    X = w.dist.sample(1000, np.random.default_rng(4))
    y = w.label(X, np.random.default_rng(5))
    np.testing.assert_array_equal(y, sign(X @ w.target.u))
    assert y.dtype == np.int8


def test_single_point_label():
    u = np.zeros(3)
    u[1] = 1.0
    tgt = SparseTarget(u, (1,), 1)
    rng = np.random.default_rng(0)
    assert label([5.0, 0.2, -1.0], tgt, NoiseModel.realizable(), rng) == 1
    assert label([5.0, -0.2, -1.0], tgt, NoiseModel.realizable(), rng) == -1
    assert label([5.0, 0.0, -1.0], tgt, NoiseModel.realizable(), rng) == 1


def test_bounded_constant_flip_frequency():
    eta = 0.2
    w = _world(noise=NoiseModel.bounded(eta))
    X = w.dist.sample(100_000, np.random.default_rng(6))
    y = w.label(X, np.random.default_rng(7))
    rate = np.mean(y != sign(X @ w.target.u))
    assert abs(rate - eta) < 4 * math.sqrt(eta * (1 - eta) / len(y))


def test_margin_decay_flip_bounded_by_eta():
    eta = 0.3
    w = _world(noise=NoiseModel.bounded(eta, BoundedProfile.MARGIN_DECAY))
    X = w.dist.sample(200_000, np.random.default_rng(8))
    m = np.abs(X @ w.target.u)
    y = w.label(X, np.random.default_rng(9))
    flipped = y != sign(X @ w.target.u)
    # bucket by margin; empirical rate tracks eta exp(-|m|) and never exceeds eta
    edges = np.quantile(m, np.linspace(0, 1, 11))
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (m >= lo) & (m < hi)
        expect = np.mean(eta * np.exp(-m[sel]))
        sd = math.sqrt(expect * (1 - expect) / sel.sum())
        assert abs(flipped[sel].mean() - expect) < 4 * sd
        assert flipped[sel].mean() <= eta + 4 * sd


@pytest.mark.parametrize("make", [gaussian, uniform_ball])
def test_boundary_band_adversary_flips_nu(make):
    nu = 0.05
    w = _world(noise=NoiseModel.adversarial(nu), dist=make(10))
    X = w.dist.sample(100_000, np.random.default_rng(10))
    y = w.label(X, np.random.default_rng(11))
    flipped = y != sign(X @ w.target.u)
    assert abs(flipped.mean() - nu) < 4 * math.sqrt(nu * (1 - nu) / len(y))
    gamma = boundary_band_width(w.dist, nu)
    np.testing.assert_array_equal(flipped, np.abs(X @ w.target.u) <= gamma)


def test_hashed_adversary_is_deterministic():
    nu = 0.1
    w = _world(noise=NoiseModel.adversarial(nu, AdversaryStrategy.HASHED_RANDOM))
    X = w.dist.sample(50_000, np.random.default_rng(12))
    y1 = w.label(X, np.random.default_rng(13))
    y2 = w.label(X, np.random.default_rng(99))
    np.testing.assert_array_equal(y1, y2)
    rate = np.mean(y1 != sign(X @ w.target.u))
    assert abs(rate - nu) < 4 * math.sqrt(nu * (1 - nu) / len(y1))


def test_hash_unit_range_and_spread():
    h = hash_unit(np.random.default_rng(14).standard_normal((20_000, 5)))
    assert h.min() >= 0.0 and h.max() < 1.0
    assert stats.kstest(h, "uniform").pvalue > 1e-3


def test_noise_model_validation():
    with pytest.raises(ParameterError):
        NoiseModel.bounded(0.5)
    with pytest.raises(ParameterError):
        NoiseModel.adversarial(0.0)
    with pytest.raises(ParameterError):
        World(gaussian(4), sample_target(5, 2, np.random.default_rng(0)), NoiseModel.realizable())


# band mass


def test_band_mass_gaussian_closed_form():
    v = np.zeros(4)
    v[0] = 1.0
    for b in (0.1, 0.5, 1.0, 2.0):
        assert band_mass(gaussian(4), v, b) == pytest.approx(2 * stats.norm.cdf(b) - 1, abs=1e-14)
    assert band_mass(gaussian(4), v, math.inf) == 1.0


@pytest.mark.parametrize("make", [gaussian, uniform_ball])
def test_band_mass_agrees_with_monte_carlo(make):
    dist = make(8)
    rng = np.random.default_rng(15)
    v = rng.standard_normal(8)
    v /= np.linalg.norm(v)
    for b in (0.05, 0.3, 1.0):
        p, se = monte_carlo_band_mass(dist, v, b, 100_000, rng)
        assert abs(p - band_mass(dist, v, b)) < 4 * se


def test_band_mass_rejects_non_unit_normal():
    with pytest.raises(ParameterError):
        band_mass(gaussian(2), np.array([1.0, 1.0]), 0.5)
