import math

import numpy as np
import pytest
from scipy import stats

from pawl.binning import BinPartition
from pawl.targets import (
    Bimodal1D,
    DataFormatError,
    GPriorTarget,
    IsingTarget,
    MixturePosteriorTarget,
    TemperedTarget,
    TrimodalTarget,
    enumerate_psi,
    generate_mixture_data,
    ising_counts,
    ising_delta,
    load_grid_image,
    load_mixture_data,
    load_pollution_data,
)
from pawl.targets.io import data_path


# trimodal

def test_trimodal_values():
    t = TrimodalTarget()
    assert t.log_density([[8.0, 8.0]])[0] == pytest.approx(np.log(0.1218), abs=2e-3)
    assert t.log_density([[0.0, 0.0]])[0] == pytest.approx(np.log(1 / (6 * np.pi)), abs=1e-6)
    assert np.log(1 / (6 * np.pi)) == pytest.approx(-2.937, abs=1e-3)


def test_trimodal_matches_scipy():
    t = TrimodalTarget()
    x = np.random.default_rng(0).normal(4, 4, size=(50, 2))
    ref = sum(
        stats.multivariate_normal(m, c).pdf(x) / 3
        for m, c in zip(t.means, [[[1, 0.9], [0.9, 1]], [[1, -0.9], [-0.9, 1]], np.eye(2)])
    )
    np.testing.assert_allclose(t.log_density(x), np.log(ref), rtol=1e-10)


def test_trimodal_initial_states():
    x = TrimodalTarget().initial_states(100_000, np.random.default_rng(0))
    np.testing.assert_allclose(x.var(axis=0), 0.1, rtol=0.02)


# g-prior

@pytest.fixture(scope="module")
def gprior():
    return GPriorTarget()


def test_pollution_shape():
    X, y = load_pollution_data()
    assert X.shape == (60, 15) and y.shape == (60,)
    np.testing.assert_allclose(X.mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(X.std(0), 1, atol=1e-12)


def test_gprior_null_model(gprior):
    value = gprior.log_density(np.zeros((1, 15)))[0]
    expected = -0.5 * np.log(gprior.g + 1) - 30 * np.log(gprior.y @ gprior.y)
    assert value == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("cols", [[0], [3, 7], [0, 1, 2, 8, 13]])
def test_gprior_normal_equations_oracle(gprior, cols):
    X, y, g = gprior.X, gprior.y, gprior.g
    Xg = X[:, cols]
    fit = y @ Xg @ np.linalg.solve(Xg.T @ Xg, Xg.T @ y)
    expected = -(len(cols) + 1) / 2 * np.log1p(g) - 30 * np.log(y @ y - g / (g + 1) * fit)
    state = np.zeros((1, 15), dtype=np.int8)
    state[0, cols] = 1
    assert gprior.log_density(state)[0] == pytest.approx(expected, rel=1e-10)


def test_gprior_column_permutation_consistency(gprior):
    rng = np.random.default_rng(0)
    perm = rng.permutation(15)
    other = GPriorTarget(gprior.X[:, perm], gprior.y)
    states = rng.integers(0, 2, size=(40, 15)).astype(np.int8)
    np.testing.assert_allclose(other.log_density(states[:, perm]), gprior.log_density(states), rtol=1e-10)


def test_gprior_cache_is_transparent(gprior):
    states = np.random.default_rng(1).integers(0, 2, size=(20, 15))
    first = gprior.log_density(states)
    np.testing.assert_array_equal(first, gprior.log_density(states))


def test_psi_single_bin(gprior):
    log_psi = enumerate_psi(gprior, BinPartition(np.array([]), 0.0))
    np.testing.assert_allclose(np.exp(log_psi), [1.0])


def test_psi_two_bins_at_median(gprior):
    energies = -gprior.log_density(gprior.all_states())
    p = BinPartition(np.array([np.median(energies)]), energies.min())
    log_psi = enumerate_psi(gprior, p)
    # the upper half holds about e^-60 of the mass, so psi(0) is 1 to double precision;
    # check the open interval in log space
    assert np.isfinite(log_psi).all() and log_psi[1] < 0
    assert np.log1p(-np.exp(log_psi[1])) <= log_psi[0] <= 0
    assert np.exp(log_psi).sum() == pytest.approx(1.0, abs=1e-12)


def test_psi_regression_fixture(gprior, psi_fixture):
    edges = np.linspace(377.0, 450.0, 21)[1:-1]
    log_psi = enumerate_psi(gprior, BinPartition(edges, 377.0))
    np.testing.assert_allclose(log_psi, psi_fixture, atol=1e-8)


# mixture

@pytest.fixture(scope="module")
def mixture():
    return MixturePosteriorTarget()


def test_mixture_data_fixture():
    y = load_mixture_data()
    assert y.size == 100
    np.testing.assert_array_equal(np.round(generate_mixture_data(), 12), np.round(y, 12))
    band = 3 * np.sqrt((0.55**2 + 11.25) / 100)
    assert abs(y.mean() - 1.5) < band


def test_mixture_kappa(mixture):
    R = mixture.y.max() - mixture.y.min()
    assert mixture.kappa == pytest.approx(4 / R**2)


def test_mixture_label_invariance(mixture):
    rng = np.random.default_rng(0)
    states = mixture.sample_prior(200, rng)
    K = mixture.K
    for _ in range(5):
        perm = rng.permutation(K)
        idx = np.concatenate([perm, K + perm, 2 * K + perm, [3 * K]])
        np.testing.assert_array_equal(mixture.log_density(states[:, idx]), mixture.log_density(states))


def _reference_mixture(t, s):
    K = t.K
    logw, mu, loglam, logbeta = s[:K], s[K:2 * K], s[2 * K:3 * K], s[3 * K]
    w = [math.exp(v) for v in logw]
    q = [v / sum(w) for v in w]
    lam = [math.exp(v) for v in loglam]
    beta = math.exp(logbeta)
    ll = 0.0
    for y in t.y:
        ll += math.log(sum(q[k] * math.sqrt(lam[k] / (2 * math.pi)) * math.exp(-0.5 * lam[k] * (y - mu[k]) ** 2)
                           for k in range(K)))
    lp = 0.0
    for k in range(K):
        lp += -w[k] + logw[k]
        lp += 0.5 * math.log(t.kappa / (2 * math.pi)) - 0.5 * t.kappa * (mu[k] - t.M) ** 2
        lp += t.alpha * math.log(beta) - math.lgamma(t.alpha) + (t.alpha - 1) * loglam[k] - beta * lam[k] + loglam[k]
    lp += t.g * math.log(t.h) - math.lgamma(t.g) + (t.g - 1) * logbeta - t.h * beta + logbeta
    return ll + lp


def test_mixture_matches_scalar_reference(mixture):
    rng = np.random.default_rng(5)
    K = mixture.K
    # states near the data, where the scalar reference does not underflow
    states = np.column_stack([
        rng.normal(0, 0.5, (5, K)), rng.normal(1.5, 3.0, (5, K)), rng.normal(0, 1, (5, K)), rng.normal(0, 1, (5, 1))
    ])
    for s in states:
        assert mixture.log_density(s[None])[0] == pytest.approx(_reference_mixture(mixture, s), abs=1e-10, rel=1e-12)


def test_mixture_single_component_normal_gamma():
    y = np.array([-1.0, 0.5, 2.0])
    t = MixturePosteriorTarget(data=y, K=1)
    w, mu, lam, beta = 0.7, 0.3, 1.8, 2.5
    state = np.array([[np.log(w), mu, np.log(lam), np.log(beta)]])
    expected = (
        stats.norm(mu, 1 / np.sqrt(lam)).logpdf(y).sum()
        + stats.expon.logpdf(w) + np.log(w)
        + stats.norm(t.M, 1 / np.sqrt(t.kappa)).logpdf(mu)
        + stats.gamma(t.alpha, scale=1 / beta).logpdf(lam) + np.log(lam)
        + stats.gamma(t.g, scale=1 / t.h).logpdf(beta) + np.log(beta)
    )
    assert t.log_density(state)[0] == pytest.approx(expected, rel=1e-12)


def test_mixture_nonfinite_state_is_minus_infinity(mixture):
    s = mixture.sample_prior(1, np.random.default_rng(0))
    s[0, 2 * mixture.K] = 800.0
    assert mixture.log_density(s)[0] == -np.inf


# Ising

def test_ising_3x3_all_ones():
    t = IsingTarget(np.ones((3, 3), dtype=np.int8), alpha=1.0, beta=0.7)
    assert t.log_density(np.ones((1, 3, 3)))[0] == pytest.approx(23.0)
    agree, pairs = ising_counts(np.ones((3, 3)), np.ones((3, 3)))
    assert agree[0] == 9 and pairs[0] == 20


def test_ising_zero_parameters():
    t = IsingTarget(np.ones((4, 4)), alpha=0.0, beta=0.0)
    x = np.random.default_rng(0).integers(0, 2, size=(5, 4, 4))
    np.testing.assert_array_equal(t.log_density(x), 0.0)


def _brute_pairs(x):
    H, W = x.shape
    count = 0
    for r in range(H):
        for c in range(W):
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < H and 0 <= cc < W and x[r, c] == x[rr, cc]:
                    count += 1
    return count


def test_ising_pairs_brute_force():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, size=(6, 5))
    assert ising_counts(x, x)[1][0] == _brute_pairs(x)


def test_ising_delta_matches_full_evaluation():
    rng = np.random.default_rng(2)
    y = rng.integers(0, 2, size=(7, 6))
    t = IsingTarget(y, alpha=1.0, beta=0.7)
    x = rng.integers(0, 2, size=(7, 6))
    for pixel in range(42):
        flipped = x.copy().reshape(-1)
        flipped[pixel] = 1 - flipped[pixel]
        flipped = flipped.reshape(7, 6)
        full = t.stats(flipped[None]) - t.stats(x[None])
        np.testing.assert_array_equal(full[0], t.stats_delta(x[None], np.array([pixel]))[0])
        assert ising_delta(t, x, pixel) == pytest.approx(t.log_density(flipped[None])[0] - t.log_density(x[None])[0])


def test_ising_shape_mismatch():
    t = IsingTarget(np.ones((3, 3)))
    with pytest.raises(ValueError):
        t.log_density(np.ones((1, 4, 4)))


def test_bundled_image():
    t = IsingTarget()
    assert t.y.shape == (40, 40)
    assert set(np.unique(t.y)) <= {0, 1}


# io

def test_grid_round_trip(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("010\n111\n")
    np.testing.assert_array_equal(load_grid_image(path), [[0, 1, 0], [1, 1, 1]])


@pytest.mark.parametrize("text,needle", [("010\n1x1\n", "line 2"), ("010\n11\n", "line 2")])
def test_grid_errors(tmp_path, text, needle):
    path = tmp_path / "g.txt"
    path.write_text(text)
    with pytest.raises(DataFormatError, match=needle):
        load_grid_image(path)


def test_truncated_pollution_file(tmp_path):
    lines = data_path("pollution.csv").read_text().splitlines()
    lines[5] = ",".join(lines[5].split(",")[:10])
    path = tmp_path / "p.csv"
    path.write_text("\n".join(lines))
    with pytest.raises(DataFormatError, match="line 6"):
        load_pollution_data(path)


# tempering

def test_tempered_target():
    t = TrimodalTarget()
    x = np.random.default_rng(0).normal(size=(5, 2))
    np.testing.assert_array_equal(TemperedTarget(t, 1.0).log_density(x), t.log_density(x))
    np.testing.assert_allclose(TemperedTarget(t, 10.0).log_density(x), t.log_density(x) / 10, rtol=1e-15)
    with pytest.raises(ValueError):
        TemperedTarget(t, 0.5)


def test_bimodal_normalized():
    from scipy.integrate import quad

    t = Bimodal1D()
    assert quad(lambda x: t.pdf(x)[0], -np.inf, np.inf)[0] == pytest.approx(1.0, abs=1e-10)
