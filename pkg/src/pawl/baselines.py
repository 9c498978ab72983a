"""Comparison samplers: parallel adaptive MH, tempered MH and tempered SMC."""
from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator

from ._math import logsumexp
from .engine import _check_positive_int, initialize_ensemble, make_proposal, run_mh
from .proposals import CovarianceRandomWalk
from .record import RunRecord
from .streams import MAIN, PRELIMINARY, run_streams, smc_generator
from .targets.base import TargetModel, TemperedTarget

logger = logging.getLogger(__name__)


class DegenerateWeightsError(RuntimeError):
    pass


class PAMH(BaseEstimator):
    """Parallel adaptive Metropolis-Hastings: N chains on ``pi^(1/temperature)``.

    The chains share one proposal adapter. Draws use the same streams as
    :class:`pawl.engine.PAWL` so that PAWL with a single bin reproduces PAMH.
    """

    def __init__(
        self,
        n_chains=10,
        n_iterations=1000,
        temperature=1.0,
        proposal="auto",
        adapt_proposal=True,
        target_rate=0.234,
        sigma0=1.0,
        w2=0.05,
        sigma_I=None,
        thin=10,
        random_state=None,
    ):
        self.n_chains = n_chains
        self.n_iterations = n_iterations
        self.temperature = temperature
        self.proposal = proposal
        self.adapt_proposal = adapt_proposal
        self.target_rate = target_rate
        self.sigma0 = sigma0
        self.w2 = w2
        self.sigma_I = sigma_I
        self.thin = thin
        self.random_state = random_state

    def fit(self, target: TargetModel, init_states=None):
        _check_positive_int("n_chains", self.n_chains)
        _check_positive_int("n_iterations", self.n_iterations, allow_zero=True)
        _check_positive_int("thin", self.thin)
        if self.temperature < 1:
            raise ValueError("temperature must be >= 1")
        N = self.n_chains
        run_target = target if self.temperature == 1 else TemperedTarget(target, self.temperature)
        algorithm = "pamh" if self.temperature == 1 else "tempered-mh"
        record = RunRecord(algorithm, target.name, N, self.n_iterations, target.discrete)
        shared, _ = run_streams(self.random_state, PRELIMINARY, 0)
        _, chains = run_streams(self.random_state, MAIN, N)
        states = target.initial_states(N, shared) if init_states is None else init_states
        ensemble = initialize_ensemble(run_target, states)
        proposal = make_proposal(
            self.proposal, run_target, self.sigma0, self.adapt_proposal, self.target_rate, self.w2, self.sigma_I
        )
        record.observe_xi(ensemble.xi)
        self.record_ = record
        run_mh(run_target, ensemble, proposal, chains, self.n_iterations, record=record, thin=self.thin)
        if self.temperature != 1:
            # report energies of the untempered target
            record.xi_min *= self.temperature
            record.xi_max *= self.temperature
            for j in range(len(record.sample_xi)):
                record.sample_xi[j] = record.sample_xi[j] * self.temperature
                record.sample_log_density[j] = record.sample_log_density[j] * self.temperature
        record.final_log_theta = np.zeros(1)
        self.record_ = record
        self.ensemble_ = ensemble
        self.proposal_ = proposal
        self.n_evaluations_ = record.n_evaluations
        return self


def pamh_run(target, N, T, seed, **kwargs) -> RunRecord:
    return PAMH(n_chains=N, n_iterations=T, random_state=seed, **kwargs).fit(target).record_


def ess(log_weights) -> float:
    """``(sum w)^2 / sum w^2``, computed in log space."""
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0 or not np.any(np.isfinite(lw)) or np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise DegenerateWeightsError("all weights are zero or not finite")
    return float(np.exp(2 * logsumexp(lw) - logsumexp(2 * lw)))


def normalized_weights(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0 or not np.any(np.isfinite(lw)) or np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise DegenerateWeightsError("all weights are zero or not finite")
    w = np.exp(lw - logsumexp(lw))
    return w / w.sum()


def systematic_resample(log_weights, rng) -> np.ndarray:
    """Ancestor indices from one uniform shift ``u ~ U[0, 1/M)``."""
    w = normalized_weights(log_weights)
    M = w.size
    positions = (rng.random() + np.arange(M)) / M
    cumw = np.cumsum(w)
    cumw[-1] = 1.0
    return np.minimum(np.searchsorted(cumw, positions, side="left"), M - 1)


class GaussianReference:
    """Sampleable, evaluable Gaussian initial distribution."""

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(cov, dtype=float))
        self._chol = np.linalg.cholesky(self.cov)
        p = self.mean.size
        self._log_norm = -0.5 * p * np.log(2 * np.pi) - np.log(np.diag(self._chol)).sum()

    def sample(self, n, rng):
        return self.mean + rng.standard_normal((n, self.mean.size)) @ self._chol.T

    def log_density(self, states):
        diff = np.atleast_2d(states) - self.mean
        z = np.linalg.solve(self._chol, diff.T)
        return self._log_norm - 0.5 * (z**2).sum(axis=0)


class TemperedSMC(BaseEstimator):
    """Tempered SMC from ``p0`` to ``pi`` along ``zeta_k = k / K``.

    When the ESS falls below ``ess_threshold * M`` the particles are
    systematically resampled and moved by ``n_moves`` random-walk MH steps with
    covariance ``scale_fraction * Sigma_hat`` (particle covariance recomputed
    at each resampling). Resample-move is applied from the second step on, so
    with ``K = 1`` this is plain importance sampling from ``p0``.
    """

    def __init__(self, n_particles=10000, n_temperatures=100, ess_threshold=0.9, n_moves=5, scale_fraction=0.1,
                 random_state=None):
        self.n_particles = n_particles
        self.n_temperatures = n_temperatures
        self.ess_threshold = ess_threshold
        self.n_moves = n_moves
        self.scale_fraction = scale_fraction
        self.random_state = random_state

    def fit(self, target: TargetModel, p0=None):
        _check_positive_int("n_particles", self.n_particles)
        _check_positive_int("n_temperatures", self.n_temperatures)
        _check_positive_int("n_moves", self.n_moves, allow_zero=True)
        if not 0 < self.ess_threshold <= 1:
            raise ValueError("ess_threshold must lie in (0, 1]")
        if p0 is None:
            if not hasattr(target, "initial_distribution"):
                raise ValueError(f"target {target.name!r} has no default initial distribution; pass p0")
            p0 = target.initial_distribution()
        M, K = self.n_particles, self.n_temperatures
        rng = smc_generator(self.random_state)
        record = RunRecord("smc", target.name, M, K, target.discrete)

        x = p0.sample(M, rng)
        with np.errstate(invalid="ignore", over="ignore"):
            log_p0 = np.asarray(p0.log_density(x), dtype=float)
        log_pi = np.asarray(target.log_density(x), dtype=float)
        n_eval = M
        log_w = np.zeros(M)
        zeta_prev = 0.0
        ess_trace = []
        for k in range(1, K + 1):
            zeta = k / K
            if k > 1 and ess(log_w) < self.ess_threshold * M:
                x, log_pi, log_p0, moved = self._resample_move(target, p0, x, log_w, log_pi, log_p0, zeta_prev, rng)
                n_eval += moved
                log_w = np.zeros(M)
                record.n_resampling += 1
            with np.errstate(invalid="ignore"):
                incr = (log_pi - log_p0) * (zeta - zeta_prev)
            log_w = log_w + np.where(np.isnan(incr), -np.inf, incr)
            if not np.any(np.isfinite(log_w)):
                raise DegenerateWeightsError(f"all particle weights vanished at temperature step {k} (zeta={zeta:g})")
            zeta_prev = zeta
            ess_trace.append((k, ess(log_w)))

        record.n_evaluations = n_eval
        record.add_samples(K, x, log_pi, -log_pi, np.zeros(M, dtype=np.int64))
        record.sample_log_weights = log_w - logsumexp(log_w)
        record.observe_xi(-log_pi)
        record.final_log_theta = np.zeros(1)
        record.extra["ess_trace"] = ess_trace
        self.record_ = record
        self.particles_ = x
        self.log_weights_ = record.sample_log_weights
        self.n_resampling_ = record.n_resampling
        self.n_evaluations_ = n_eval
        return self

    def _resample_move(self, target, p0, x, log_w, log_pi, log_p0, zeta, rng):
        idx = systematic_resample(log_w, rng)
        x, log_pi, log_p0 = x[idx], log_pi[idx], log_p0[idx]
        cov = np.atleast_2d(np.cov(x, rowvar=False))
        proposal = CovarianceRandomWalk(self.scale_fraction * cov)
        n = len(x)
        for _ in range(self.n_moves):
            prop, _ = proposal.propose(x, rng)
            with np.errstate(invalid="ignore", over="ignore"):
                lp_pi = np.asarray(target.log_density(prop), dtype=float)
                lp_p0 = np.asarray(p0.log_density(prop), dtype=float)
                new = zeta * lp_pi + (1 - zeta) * lp_p0
                old = zeta * log_pi + (1 - zeta) * log_p0
                log_ratio = np.where(np.isfinite(new), new - old, -np.inf)
            accept = np.log(rng.random(n)) < log_ratio
            x = np.where(accept[:, None], prop, x)
            log_pi = np.where(accept, lp_pi, log_pi)
            log_p0 = np.where(accept, lp_p0, log_p0)
        return x, log_pi, log_p0, self.n_moves * n


def smc_run(target, p0, M, K, seed, **kwargs) -> RunRecord:
    return TemperedSMC(n_particles=M, n_temperatures=K, random_state=seed, **kwargs).fit(target, p0).record_
