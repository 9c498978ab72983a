"""Proposal mechanisms and their adaptation rules.

All proposals here are symmetric, so the Metropolis-Hastings correction term
is zero. Adaptation happens at the synchronization point after every sweep
through :meth:`adapt`; :meth:`propose` only reads adapter state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

OPTIMAL_SCALE2 = 2.38**2


def inverse_rho(t: int) -> float:
    return 1.0 / max(t, 1)


@dataclass
class ScaleAdapter:
    """Robbins-Monro tuning of a random-walk standard deviation."""

    sigma: float = 1.0
    rho_schedule: Callable[[int], float] = inverse_rho
    target_rate: float = 0.234
    sigma_floor: float = 1e-9

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        self.sigma = max(float(self.sigma), self.sigma_floor)

    def update(self, acceptance: float, t: int) -> float:
        direction = 1.0 if acceptance > self.target_rate else -1.0
        self.sigma = max(self.sigma_floor, self.sigma + self.rho_schedule(t) * direction)
        return self.sigma


def update_scale(adapter: ScaleAdapter, acceptance: float, t: int) -> ScaleAdapter:
    adapter.update(acceptance, t)
    return adapter


@dataclass
class CovarianceAdapter:
    """Running mean and sample covariance of every chain state fed so far."""

    p: int
    w2: float = 0.05
    sigma_I: float = 10.0
    running_mean: np.ndarray = None
    m2: np.ndarray = None
    sample_count: int = 0

    def __post_init__(self):
        if not 0 <= self.w2 <= 1:
            raise ValueError("w2 must lie in [0, 1]")
        if self.running_mean is None:
            self.running_mean = np.zeros(self.p)
        if self.m2 is None:
            self.m2 = np.zeros((self.p, self.p))

    @property
    def w1(self) -> float:
        return 1.0 - self.w2

    @property
    def running_covariance(self) -> np.ndarray:
        if self.sample_count < 2:
            return np.zeros((self.p, self.p))
        return self.m2 / (self.sample_count - 1)

    def feed(self, batch) -> None:
        """Merge a batch of points into the running statistics (Chan et al. update)."""
        batch = np.atleast_2d(np.asarray(batch, dtype=float))
        if batch.shape[1] != self.p:
            raise ValueError(f"expected points of dimension {self.p}, got {batch.shape[1]}")
        nb = batch.shape[0]
        if nb == 0:
            return
        mean_b = batch.mean(axis=0)
        dev = batch - mean_b
        m2_b = dev.T @ dev
        n = self.sample_count
        total = n + nb
        delta = mean_b - self.running_mean
        self.running_mean = self.running_mean + delta * (nb / total)
        self.m2 = self.m2 + m2_b + np.outer(delta, delta) * (n * nb / total)
        # keep exactly symmetric
        self.m2 = 0.5 * (self.m2 + self.m2.T)
        self.sample_count = total

    def cholesky(self) -> Optional[np.ndarray]:
        """Factor of ``(2.38^2/p) * Sigma`` (regularized); None when unusable."""
        if self.sample_count < self.p + 1:
            return None
        cov = self.running_covariance
        tr = np.trace(cov)
        if not np.isfinite(tr) or tr <= 0:
            return None
        cov = cov + np.eye(self.p) * (1e-10 * tr / self.p)
        try:
            return np.linalg.cholesky(cov * (OPTIMAL_SCALE2 / self.p))
        except np.linalg.LinAlgError:
            return None


def welford_feed(adapter: CovarianceAdapter, batch) -> CovarianceAdapter:
    adapter.feed(batch)
    return adapter


def sample_mixture_proposal(adapter: CovarianceAdapter, current, rng, chol=None):
    """Draw from ``w1 N(x, 2.38^2/p Sigma) + w2 N(x, sigma_I^2/p I)`` per row."""
    current = np.atleast_2d(np.asarray(current, dtype=float))
    n, p = current.shape
    u = rng.random(n)
    z = rng.standard_normal((n, p))
    if chol is None:
        chol = adapter.cholesky()
    safety = z * (adapter.sigma_I / np.sqrt(p))
    if chol is None:
        return current + safety
    adaptive = z @ chol.T
    use_adaptive = (u < adapter.w1)[:, None]
    return current + np.where(use_adaptive, adaptive, safety)


def propose_flip(current, rng):
    """Flip one uniformly chosen site per row; returns ``(proposed, flat_index)``."""
    current = np.asarray(current)
    n = current.shape[0]
    sites = int(np.prod(current.shape[1:]))
    if sites == 0:
        raise ValueError("cannot flip an empty state")
    idx = rng.integers(0, sites, size=n)
    proposed = current.copy()
    flat = proposed.reshape(n, sites)
    flat[np.arange(n), idx] = 1 - flat[np.arange(n), idx]
    return proposed, idx


class Proposal:
    """Base class: symmetric proposal with optional adaptation."""

    symmetric = True

    def propose(self, states, rng):
        """Return ``(proposed_states, flipped_index_or_None)``."""
        raise NotImplementedError

    def log_correction(self, states, proposed):
        return np.zeros(len(states))

    def adapt(self, states, acceptance: float, t: int) -> None:
        pass

    @property
    def scale(self) -> float:
        return np.nan


class RandomWalkProposal(Proposal):
    """Isotropic Gaussian random walk with Robbins-Monro scale tuning."""

    def __init__(self, sigma0=1.0, adapt=True, target_rate=0.234, rho_schedule=inverse_rho, sigma_floor=1e-9):
        self.adapter = ScaleAdapter(sigma0, rho_schedule, target_rate, sigma_floor)
        self.adaptive = adapt

    def propose(self, states, rng):
        return states + self.adapter.sigma * rng.standard_normal(states.shape), None

    def adapt(self, states, acceptance, t):
        if self.adaptive:
            self.adapter.update(acceptance, t)

    @property
    def scale(self):
        return self.adapter.sigma


class MixtureProposal(Proposal):
    """Adaptive-covariance random walk with an isotropic safety-net component."""

    def __init__(self, p, sigma0=1.0, w2=0.05, sigma_I=None, adapt=True):
        self.adapter = CovarianceAdapter(p, w2, 10.0 * sigma0 if sigma_I is None else sigma_I)
        self.adaptive = adapt
        self._chol = None

    def propose(self, states, rng):
        return sample_mixture_proposal(self.adapter, states, rng, self._chol), None

    def adapt(self, states, acceptance, t):
        if self.adaptive:
            self.adapter.feed(states)
            self._chol = self.adapter.cholesky()

    @property
    def scale(self):
        return float(np.sqrt(np.trace(self.adapter.running_covariance) / self.adapter.p))


class FlipProposal(Proposal):
    """Flip one binary coordinate or pixel chosen uniformly at random."""

    def propose(self, states, rng):
        return propose_flip(states, rng)


class CovarianceRandomWalk(Proposal):
    """Random walk with a fixed covariance (used for the SMC move steps)."""

    def __init__(self, cov):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        p = cov.shape[0]
        tr = np.trace(cov)
        try:
            self.chol = np.linalg.cholesky(cov + np.eye(p) * (1e-10 * max(tr, 1e-300) / p))
        except np.linalg.LinAlgError:
            self.chol = np.eye(p) * np.sqrt(max(tr / p, 1e-12))

    def propose(self, states, rng):
        return states + rng.standard_normal(states.shape) @ self.chol.T, None
