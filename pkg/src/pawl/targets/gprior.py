"""Posterior over variable-inclusion indicators under Zellner's g-prior."""
from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from ..binning import locate_bin
from .base import TargetModel
from .io import load_pollution_data

logger = logging.getLogger(__name__)


class GPriorTarget(TargetModel):
    """``log pi(gamma) = -(q+1)/2 log(g+1) - n/2 log(y'y - g/(g+1) y'P_gamma y)``.

    ``P_gamma`` is the projection onto the selected columns of ``X``, obtained
    from a QR factorization. Values are memoized per model since the state
    space is finite.
    """

    discrete = True
    name = "gprior"

    def __init__(self, X=None, y=None, g=np.exp(20.0)):
        if X is None or y is None:
            X, y = load_pollution_data()
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        n, p = self.X.shape
        if self.y.shape != (n,):
            raise ValueError("y must have one entry per row of X")
        self.n, self.p = n, p
        self.g = float(g)
        self.state_shape = (p,)
        self._yy = float(self.y @ self.y)
        self._log_g1 = np.log1p(self.g)
        self._shrink = self.g / (self.g + 1.0)
        self._powers = (1 << np.arange(p)).astype(np.int64)
        self._cache = np.full(1 << p, np.nan) if p <= 24 else None

    def _projection(self, mask) -> float:
        if not mask.any():
            return 0.0
        Xg = self.X[:, mask]
        Q, R = np.linalg.qr(Xg)
        diag = np.abs(np.diag(R))
        if diag.min() <= 1e-10 * max(diag.max(), 1.0):
            logger.warning("rank-deficient design for model %s; using pseudo-inverse", np.flatnonzero(mask))
            fitted = Xg @ (np.linalg.pinv(Xg) @ self.y)
            return float(self.y @ fitted)
        r = Q.T @ self.y
        return float(r @ r)

    def _single(self, mask) -> float:
        q = int(mask.sum())
        rss = self._yy - self._shrink * self._projection(mask)
        return -0.5 * (q + 1) * self._log_g1 - 0.5 * self.n * np.log(rss)

    def keys(self, states):
        return (np.asarray(states).astype(np.int64) @ self._powers).astype(np.int64)

    def log_density(self, states):
        states = np.atleast_2d(np.asarray(states)).astype(bool)
        if self._cache is None:
            return np.array([self._single(s) for s in states])
        keys = self.keys(states)
        values = self._cache[keys]
        missing = np.flatnonzero(np.isnan(values))
        for j in missing:
            self._cache[keys[j]] = self._single(states[j])
        return self._cache[keys]

    def initial_states(self, n, rng):
        return (rng.random((n, self.p)) < 0.5).astype(np.int8)

    def all_states(self) -> np.ndarray:
        codes = np.arange(1 << self.p, dtype=np.int64)
        return ((codes[:, None] >> np.arange(self.p)) & 1).astype(np.int8)


def gprior_log_density(target: GPriorTarget, gamma):
    return target.log_density(np.atleast_2d(gamma))


def enumerate_psi(target: GPriorTarget, partition, coordinate=None):
    """Exact mass of every bin, by evaluating all ``2^p`` models.

    Returns log-masses normalized to sum to one; empty bins get ``-inf``.
    """
    states = target.all_states()
    log_pi = target.log_density(states)
    xi = -log_pi if coordinate is None else coordinate(states, log_pi)
    bins = locate_bin(xi, partition)
    log_mass = np.full(partition.d, -np.inf)
    for i in np.unique(bins):
        log_mass[i] = logsumexp(log_pi[bins == i])
    return log_mass - logsumexp(log_mass)
