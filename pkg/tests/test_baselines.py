import numpy as np
import pytest
from scipy import stats

from pawl.baselines import (
    PAMH,
    DegenerateWeightsError,
    GaussianReference,
    TemperedSMC,
    ess,
    normalized_weights,
    systematic_resample,
)
from pawl.targets import GPriorTarget, TargetModel, TrimodalTarget


class StandardGaussian(TargetModel):
    state_shape = (1,)
    name = "gaussian"

    def log_density(self, states):
        x = np.asarray(states, dtype=float).reshape(len(states), -1)
        return -0.5 * (x**2).sum(axis=1)

    def initial_states(self, n, rng):
        return rng.standard_normal((n, 1))


def test_ess_examples():
    assert ess(np.zeros(7)) == pytest.approx(7.0)
    assert ess(np.log([1.0, 0, 0, 0])) == pytest.approx(1.0)
    assert ess(np.log([0.5, 0.5, 0, 0])) == pytest.approx(2.0)
    with pytest.raises(DegenerateWeightsError):
        ess(np.full(3, -np.inf))


def test_normalized_weights_stable():
    w = normalized_weights(np.array([-1000.0, -1000.0 + np.log(3.0)]))
    np.testing.assert_allclose(w, [0.25, 0.75])


def test_systematic_resampling_examples():
    rng = np.random.default_rng(0)
    assert systematic_resample(np.log([1.0, 0, 0, 0]), rng).tolist() == [0, 0, 0, 0]
    for _ in range(20):
        assert sorted(systematic_resample(np.zeros(6), rng).tolist()) == list(range(6))


def test_systematic_count_bound():
    rng = np.random.default_rng(1)
    for _ in range(200):
        M = int(rng.integers(1, 60))
        w = rng.dirichlet(np.full(M, 0.3))
        with np.errstate(divide="ignore"):
            idx = systematic_resample(np.log(w), rng)
        counts = np.bincount(idx, minlength=M)
        assert np.all(np.abs(counts - M * w) < 1)


def test_pamh_standard_gaussian_clt():
    est = PAMH(n_chains=2, n_iterations=10_000, thin=1, proposal="rw", random_state=0).fit(StandardGaussian())
    x = np.concatenate(est.record_.sample_states).ravel()
    # effective sample size from the lag-one autocorrelation (AR(1) approximation)
    rho = np.corrcoef(x[:-2], x[2:])[0, 1]
    n_eff = x.size * (1 - rho) / (1 + rho)
    assert abs(x.mean()) < 5 / np.sqrt(n_eff)
    assert 0.15 < est.record_.acceptance_rate < 0.6


def test_pamh_evaluation_count():
    est = PAMH(n_chains=3, n_iterations=40, random_state=0).fit(TrimodalTarget())
    assert est.n_evaluations_ == 120


def test_tempered_mh_reports_untempered_energies():
    target = TrimodalTarget()
    est = PAMH(n_chains=2, n_iterations=50, thin=5, temperature=4.0, random_state=0).fit(target)
    rec = est.record_
    assert rec.algorithm == "tempered-mh"
    for states, xi in zip(rec.sample_states, rec.sample_xi):
        np.testing.assert_allclose(xi, -target.log_density(states), rtol=1e-12)


def test_tempering_explores_more_models():
    target = GPriorTarget()

    def n_models(temp):
        rec = PAMH(n_chains=2, n_iterations=2000, thin=1, temperature=temp, random_state=3).fit(target).record_
        return len({tuple(s) for s in np.concatenate(rec.sample_states)})

    assert n_models(10.0) > n_models(1.0)


def test_gaussian_reference():
    ref = GaussianReference([1.0, -1.0], [[2.0, 0.5], [0.5, 1.0]])
    x = np.array([[0.3, 0.2], [1.0, -1.0]])
    expected = stats.multivariate_normal([1.0, -1.0], [[2.0, 0.5], [0.5, 1.0]]).logpdf(x)
    np.testing.assert_allclose(ref.log_density(x), expected, rtol=1e-12)


def test_smc_target_equal_to_p0():
    ref = GaussianReference([0.0], [[1.0]])

    class Same(StandardGaussian):
        def log_density(self, states):
            return ref.log_density(states)

    est = TemperedSMC(n_particles=500, n_temperatures=10, random_state=0).fit(Same(), ref)
    assert est.n_resampling_ == 0
    np.testing.assert_allclose(np.exp(est.log_weights_), 1 / 500, rtol=1e-12)


def test_smc_single_step_is_importance_sampling():
    ref = GaussianReference([0.0], [[4.0]])
    est = TemperedSMC(n_particles=1000, n_temperatures=1, random_state=2).fit(StandardGaussian(), ref)
    x = est.particles_
    lw = StandardGaussian().log_density(x) - ref.log_density(x)
    np.testing.assert_allclose(est.log_weights_, lw - np.logaddexp.reduce(lw), atol=1e-12)
    assert est.n_evaluations_ == 1000
    assert est.n_resampling_ == 0


def test_smc_conjugate_normal_mean():
    # posterior of N(0, 1) prior times N(x; 2, 0.5^2) likelihood: N(1.6, 0.2)
    class Posterior(StandardGaussian):
        def log_density(self, states):
            x = np.asarray(states, dtype=float).reshape(-1)
            return -0.5 * x**2 - 0.5 * ((x - 2.0) / 0.5) ** 2

    est = TemperedSMC(n_particles=4000, n_temperatures=20, random_state=1).fit(Posterior(), GaussianReference([0.0], [[1.0]]))
    w = np.exp(est.log_weights_)
    x = est.particles_.ravel()
    assert w @ x == pytest.approx(1.6, abs=0.05)
    assert w @ (x - 1.6) ** 2 == pytest.approx(0.2, abs=0.03)


def test_smc_degenerate_weights_name_the_step():
    class Nowhere(StandardGaussian):
        def log_density(self, states):
            return np.full(len(states), -np.inf)

    with pytest.raises(DegenerateWeightsError, match="step 1"):
        TemperedSMC(n_particles=50, n_temperatures=5, random_state=0).fit(Nowhere(), GaussianReference([0.0], [[1.0]]))


def test_smc_requires_p0_without_prior():
    with pytest.raises(ValueError, match="p0"):
        TemperedSMC(n_particles=10, n_temperatures=2, random_state=0).fit(TrimodalTarget())


def test_smc_trimodal_broad_start_recovers_modes():
    from pawl.diagnostics import mode_occupancy, reweight

    ref = GaussianReference([4.0, 4.0], 25.0 * np.eye(2))
    est = TemperedSMC(n_particles=10_000, n_temperatures=100, random_state=0).fit(TrimodalTarget(), ref)
    occ = mode_occupancy(reweight(est.record_))
    assert (occ[:3] >= 0.05).all()
