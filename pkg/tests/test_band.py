import math

import numpy as np
import pytest
from scipy import stats

from sparse_active.band import Band, QueryLedger, draw_from_band, expected_acceptance
from sparse_active.errors import ParameterError, SamplingStarvationError
from sparse_active.world import NoiseModel, World, gaussian, sample_target, uniform_ball


def _world(d=10, t=3, dist=None, seed=0):
    return World(dist or gaussian(d), sample_target(d, t, np.random.default_rng(seed)), NoiseModel.realizable())


def _unit(d, rng):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


class CountingWorld(World):
    """World whose oracle remembers every queried point."""

    def __init__(self, base):
        super().__init__(base.dist, base.target, base.noise)
        object.__setattr__(self, "queried", [])

    def label(self, X, rng):
        self.queried.append(np.array(X, copy=True))
        return super().label(X, rng)


def test_full_space_draw_has_no_rejections():
    w = _world()
    ledger = QueryLedger()
    X, y = draw_from_band(Band.full_space(), 500, w, ledger, np.random.default_rng(0))
    assert X.shape == (500, 10) and y.shape == (500,)
    c = ledger.epochs[0]
    assert (c.unlabeled, c.rejected, c.queries) == (500, 0, 500)


def test_points_lie_in_band():
    w = _world()
    rng = np.random.default_rng(1)
    band = Band(_unit(10, rng), 0.2)
    X, _ = draw_from_band(band, 2000, w, QueryLedger(), rng)
    assert np.all(np.abs(X @ band.normal) <= 0.2)


@pytest.mark.parametrize("b", [0.05, 0.25, 1.0])
def test_acceptance_rate_matches_band_mass(b):
    w = _world()
    rng = np.random.default_rng(2)
    band = Band(_unit(10, rng), b)
    ledger = QueryLedger()
    n = 3000
    draw_from_band(band, n, w, ledger, rng)
    c = ledger.epochs[0]
    # attempts until n successes is negative binomial
    p = 2 * stats.norm.cdf(b) - 1
    assert expected_acceptance(band, w.dist) == pytest.approx(p, abs=1e-14)
    mean, sd = n / p, math.sqrt(n * (1 - p)) / p
    assert abs(c.unlabeled - mean) < 4 * sd


def test_ledger_conservation_over_epochs():
    w = _world()
    rng = np.random.default_rng(3)
    ledger = QueryLedger()
    draw_from_band(Band.full_space(), 100, w, ledger, rng, epoch=0)
    draw_from_band(Band(_unit(10, rng), 0.3), 200, w, ledger, rng, epoch=1)
    draw_from_band(Band(_unit(10, rng), 0.1), 150, w, ledger, rng, epoch=2)
    for c in ledger.epochs.values():
        assert c.unlabeled == c.rejected + c.queries
    assert ledger.queries_per_epoch() == [100, 200, 150]
    assert ledger.total_queries == 450
    assert ledger.total_unlabeled == ledger.total_rejected + ledger.total_queries


def test_only_accepted_points_are_labeled():
    base = _world()
    w = CountingWorld(base)
    rng = np.random.default_rng(4)
    band = Band(_unit(10, rng), 0.1)
    ledger = QueryLedger()
    X, _ = draw_from_band(band, 400, w, ledger, rng)
    Q = np.concatenate(w.queried)
    assert Q.shape[0] == 400 == ledger.total_queries
    np.testing.assert_array_equal(Q, X)
    assert ledger.total_rejected > 0


def test_conditional_distribution_in_2d():
    # inside the band, the coordinate along the normal is a truncated Gaussian
    # and the orthogonal coordinate stays standard normal
    w = _world(d=2, t=1)
    rng = np.random.default_rng(5)
    normal = _unit(2, rng)
    ortho = np.array([-normal[1], normal[0]])
    b = 0.5
    X, _ = draw_from_band(Band(normal, b), 20_000, w, QueryLedger(), rng)
    along, across = X @ normal, X @ ortho

    trunc = stats.truncnorm(-b, b)
    edges = trunc.ppf(np.linspace(0, 1, 11))
    counts = np.histogram(along, edges)[0]
    assert stats.chisquare(counts).pvalue > 1e-3
    assert stats.kstest(across, "norm").pvalue > 1e-3


def test_uniform_ball_band():
    w = _world(d=5, t=2, dist=uniform_ball(5))
    rng = np.random.default_rng(6)
    band = Band(_unit(5, rng), 0.4)
    X, _ = draw_from_band(band, 1000, w, QueryLedger(), rng)
    assert np.all(band.contains(X))


def test_starvation_raises():
    w = _world()
    rng = np.random.default_rng(7)
    band = Band(_unit(10, rng), 1e-9)
    with pytest.raises(SamplingStarvationError) as info:
        draw_from_band(band, 10, w, QueryLedger(), rng, max_attempts=5000)
    assert info.value.width == 1e-9
    assert info.value.attempts >= 5000


def test_band_validation():
    with pytest.raises(ParameterError):
        Band(np.array([1.0, 1.0]), 0.5)
    with pytest.raises(ParameterError):
        Band(np.array([1.0, 0.0]), 0.0)
    with pytest.raises(ParameterError):
        draw_from_band(Band.full_space(), 0, _world(), QueryLedger(), np.random.default_rng(0))


def test_ledger_rejects_impossible_counts():
    with pytest.raises(ParameterError):
        QueryLedger().record(0, unlabeled=5, rejected=3, queries=4)
