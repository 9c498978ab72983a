"""Posterior of a K-component univariate Gaussian mixture.

States live on an unconstrained scale::

    (log w_1..w_K, mu_1..mu_K, log lambda_1..lambda_K, log beta)

where ``w`` are unnormalized weights (``q_k = w_k / sum(w)``), ``lambda`` the
precisions and ``beta`` the rate of their Gamma prior. The log-Jacobian of the
log transforms is included, so a symmetric random walk in these coordinates is
a valid Metropolis-Hastings move.

Components are put in a canonical order (sorted by mean, then weight, then
precision) before anything is summed, which makes the log-density exactly
invariant to relabelling them.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from ..proposals import MixtureProposal
from .base import TargetModel
from .io import load_mixture_data

LOG_2PI = np.log(2 * np.pi)


class MixturePosteriorTarget(TargetModel):
    name = "mixture"

    def __init__(self, data=None, K=4, alpha=2.0, g=0.2, init_kappa=None):
        self.y = load_mixture_data() if data is None else np.asarray(data, dtype=float)
        self.K = K
        self.state_shape = (3 * K + 1,)
        R = float(self.y.max() - self.y.min())
        self.R = R
        self.M = float(self.y.mean())
        self.kappa = 4.0 / R**2
        self.alpha = alpha
        self.g = g
        self.h = 100.0 * g / (alpha * R**2)
        # precision of mu in the initial distribution; 1.0 gives the concentrated start
        self.init_kappa = self.kappa if init_kappa is None else float(init_kappa)

    def split(self, states):
        """Component blocks in canonical order, plus ``log beta``."""
        s = np.atleast_2d(np.asarray(states, dtype=float))
        K = self.K
        logw, mu, loglam = s[:, :K], s[:, K:2 * K], s[:, 2 * K:3 * K]
        order = np.lexsort((loglam, logw, mu), axis=-1)
        take = lambda a: np.take_along_axis(a, order, axis=1)
        return take(logw), take(mu), take(loglam), s[:, 3 * K]

    def log_likelihood(self, states):
        logw, mu, loglam, _ = self.split(states)
        log_q = logw - _logsumexp_rows(logw)[:, None]
        lam = np.exp(loglam)
        terms = self.y[None, :, None] - mu[:, None, :]
        terms *= terms
        terms *= -0.5 * lam[:, None, :]
        terms += (log_q + 0.5 * loglam - 0.5 * LOG_2PI)[:, None, :]
        top = terms.max(axis=2)
        terms -= top[:, :, None]
        np.exp(terms, out=terms)
        return (np.log(terms.sum(axis=2)) + top).sum(axis=1)

    def log_prior(self, states, kappa=None):
        """Prior density of the transformed state, Jacobian included."""
        kappa = self.kappa if kappa is None else kappa
        logw, mu, loglam, logbeta = self.split(states)
        beta = np.exp(logbeta)
        a = self.alpha
        per_component = (
            (logw - np.exp(logw))
            + (0.5 * np.log(kappa / (2 * np.pi)) - 0.5 * kappa * (mu - self.M) ** 2)
            + (a * logbeta[:, None] - gammaln(a) + a * loglam - beta[:, None] * np.exp(loglam))
        )
        hyper = self.g * np.log(self.h) - gammaln(self.g) + self.g * logbeta - self.h * beta
        return per_component.sum(axis=1) + hyper

    def log_density(self, states):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self.log_likelihood(states) + self.log_prior(states)
        out = np.where(np.isnan(out), -np.inf, out)
        return out

    def sample_prior(self, n, rng, kappa=None):
        kappa = self.kappa if kappa is None else kappa
        K = self.K
        w = rng.exponential(1.0, size=(n, K))
        mu = self.M + rng.standard_normal((n, K)) / np.sqrt(kappa)
        beta = rng.gamma(self.g, 1.0 / self.h, size=n)
        lam = rng.gamma(self.alpha, 1.0 / beta[:, None], size=(n, K))
        with np.errstate(divide="ignore"):
            return np.column_stack([np.log(w), mu, np.log(lam), np.log(beta)])

    def initial_states(self, n, rng):
        return self.sample_prior(n, rng, self.init_kappa)

    def initial_distribution(self):
        return PriorReference(self, self.init_kappa)

    def default_proposal(self, sigma0=1.0, adapt=True, target_rate=0.234):
        return MixtureProposal(self.dim, sigma0, adapt=adapt)


class PriorReference:
    """Sampleable, evaluable prior (optionally with a different ``kappa``)."""

    def __init__(self, target: MixturePosteriorTarget, kappa):
        self.target = target
        self.kappa = kappa

    def sample(self, n, rng):
        return self.target.sample_prior(n, rng, self.kappa)

    def log_density(self, states):
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.target.log_prior(states, self.kappa)
        return np.where(np.isnan(out), -np.inf, out)


def _logsumexp_rows(a):
    top = a.max(axis=1)
    return np.log(np.exp(a - top[:, None]).sum(axis=1)) + top


def mixture_log_density(target: MixturePosteriorTarget, state):
    return target.log_density(np.atleast_2d(state))
