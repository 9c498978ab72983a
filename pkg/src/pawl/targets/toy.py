"""Small targets with exactly computable bin masses, used for verification."""
from __future__ import annotations

import numpy as np

from .._math import logsumexp
from ..proposals import Proposal
from .base import TargetModel


class Bimodal1D(TargetModel):
    """``0.3 N(-2, 0.6^2) + 0.7 N(2, 1)`` on the real line."""

    state_shape = (1,)
    name = "bimodal1d"

    def __init__(self, weights=(0.3, 0.7), means=(-2.0, 2.0), sds=(0.6, 1.0)):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.sds = np.asarray(sds, dtype=float)

    def log_density(self, states):
        x = np.asarray(states, dtype=float).reshape(-1, 1)
        z = (x - self.means) / self.sds
        comp = np.log(self.weights) - np.log(self.sds) - 0.5 * np.log(2 * np.pi) - 0.5 * z**2
        return logsumexp(comp, axis=1)

    def pdf(self, x):
        return np.exp(self.log_density(np.atleast_1d(x)))

    def initial_states(self, n, rng):
        return rng.standard_normal((n, 1))


class FiniteTarget(TargetModel):
    """Distribution on ``{0, ..., K-1}``; states are ``(n, 1)`` integer arrays."""

    discrete = True
    state_shape = (1,)
    name = "finite"

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        self.log_p = np.log(p / p.sum())
        self.K = p.size

    def log_density(self, states):
        return self.log_p[np.asarray(states).reshape(-1)]

    def initial_states(self, n, rng):
        return rng.integers(0, self.K, size=(n, 1))

    def default_proposal(self, *args, **kwargs):
        return UniformStateProposal(self.K)


class UniformStateProposal(Proposal):
    """Independent uniform draw over a finite state space (symmetric)."""

    def __init__(self, K):
        self.K = K

    def propose(self, states, rng):
        return rng.integers(0, self.K, size=np.shape(states)), None
