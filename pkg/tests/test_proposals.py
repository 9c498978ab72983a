import numpy as np
import pytest

from pawl.proposals import (
    CovarianceAdapter,
    CovarianceRandomWalk,
    FlipProposal,
    MixtureProposal,
    RandomWalkProposal,
    ScaleAdapter,
    propose_flip,
    sample_mixture_proposal,
    update_scale,
    welford_feed,
)


def test_update_scale_examples():
    rho = lambda t: 0.1
    assert update_scale(ScaleAdapter(1.0, rho), 0.5, 1).sigma == pytest.approx(1.1)
    assert update_scale(ScaleAdapter(1.0, rho), 0.1, 1).sigma == pytest.approx(0.9)
    a = ScaleAdapter(1e-9, rho, sigma_floor=1e-9)
    assert update_scale(a, 0.0, 1).sigma == 1e-9


def test_default_schedule_is_inverse_t():
    a = ScaleAdapter(1.0)
    a.update(1.0, 4)
    assert a.sigma == pytest.approx(1.25)


def test_scale_must_be_positive():
    with pytest.raises(ValueError):
        ScaleAdapter(0.0)


def test_welford_example():
    a = welford_feed(CovarianceAdapter(2), np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]))
    np.testing.assert_allclose(a.running_mean, [2 / 3, 2 / 3])
    np.testing.assert_allclose(a.running_covariance, [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]], atol=1e-14)


def test_single_point_gives_zero_covariance():
    a = welford_feed(CovarianceAdapter(3), np.ones((1, 3)))
    np.testing.assert_array_equal(a.running_covariance, np.zeros((3, 3)))


def test_streaming_matches_two_pass():
    rng = np.random.default_rng(3)
    data = rng.standard_normal((500, 4)) @ rng.standard_normal((4, 4)) + 7.0
    a = CovarianceAdapter(4)
    for chunk in np.array_split(data, 37):
        a.feed(chunk)
    np.testing.assert_allclose(a.running_mean, data.mean(0), atol=1e-12)
    np.testing.assert_allclose(a.running_covariance, np.cov(data, rowvar=False), atol=1e-10)


def test_feed_order_invariance():
    rng = np.random.default_rng(4)
    batch = rng.standard_normal((10, 3))
    a, b = CovarianceAdapter(3), CovarianceAdapter(3)
    a.feed(batch)
    b.feed(batch[rng.permutation(10)])
    np.testing.assert_allclose(a.running_mean, b.running_mean, atol=1e-12)
    np.testing.assert_allclose(a.running_covariance, b.running_covariance, atol=1e-12)


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        CovarianceAdapter(2).feed(np.ones((3, 3)))


def test_pure_safety_net_component():
    a = CovarianceAdapter(4, w2=1.0, sigma_I=2.0)
    a.feed(np.random.default_rng(0).standard_normal((100, 4)) * 50)
    draws = sample_mixture_proposal(a, np.zeros((200_000, 4)), np.random.default_rng(1))
    np.testing.assert_allclose(draws.var(axis=0), 2.0**2 / 4, rtol=0.02)


def test_adaptive_component_scale():
    a = CovarianceAdapter(1, w2=0.0)
    a.running_mean = np.zeros(1)
    a.m2 = np.array([[4.0 * 9]])
    a.sample_count = 10
    draws = sample_mixture_proposal(a, np.zeros((200_000, 1)), np.random.default_rng(2))
    assert draws.std() == pytest.approx(4.76, rel=0.01)


def test_singular_covariance_falls_back_to_safety_net():
    a = CovarianceAdapter(2, w2=0.05, sigma_I=1.0)
    a.feed(np.ones((10, 2)))
    assert a.cholesky() is None
    draws = sample_mixture_proposal(a, np.zeros((100_000, 2)), np.random.default_rng(0))
    np.testing.assert_allclose(draws.var(axis=0), 0.5, rtol=0.03)


def test_flip_examples():
    out, idx = propose_flip(np.zeros((1, 3), dtype=np.int8), _FixedIndex(2))
    assert out.tolist() == [[0, 0, 1]]
    back, _ = propose_flip(out, _FixedIndex(2))
    assert back.tolist() == [[0, 0, 0]]


class _FixedIndex:
    def __init__(self, i):
        self.i = i

    def integers(self, low, high, size):
        return np.full(size, self.i)


def test_flip_frequencies_are_uniform():
    rng = np.random.default_rng(0)
    _, idx = propose_flip(np.zeros((60_000, 2, 3), dtype=np.int8), rng)
    freq = np.bincount(idx, minlength=6) / idx.size
    np.testing.assert_allclose(freq, 1 / 6, atol=0.01)


def test_flip_changes_exactly_one_site():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, size=(50, 4, 4)).astype(np.int8)
    y, _ = FlipProposal().propose(x, rng)
    assert ((x != y).reshape(50, -1).sum(axis=1) == 1).all()
    assert x.dtype == y.dtype


def test_random_walk_adaptation_switch():
    p = RandomWalkProposal(1.0, adapt=False)
    p.adapt(None, 1.0, 1)
    assert p.scale == 1.0
    p = RandomWalkProposal(1.0)
    p.adapt(None, 0.0, 2)
    assert p.scale == pytest.approx(0.5)


def test_mixture_proposal_learns_covariance():
    p = MixtureProposal(2)
    rng = np.random.default_rng(0)
    for t in range(1, 50):
        p.adapt(rng.standard_normal((10, 2)) * [1.0, 3.0], 0.3, t)
    assert p.scale == pytest.approx(np.sqrt(5.0), rel=0.15)


def test_covariance_random_walk():
    p = CovarianceRandomWalk(np.diag([1.0, 4.0]))
    out, _ = p.propose(np.zeros((100_000, 2)), np.random.default_rng(0))
    np.testing.assert_allclose(out.var(axis=0), [1.0, 4.0], rtol=0.02)
