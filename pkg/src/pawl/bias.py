"""Wang-Landau bias: log-weights per bin, visit proportions and stepsize."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from ._math import logsumexp


def inverse_schedule(k: int) -> float:
    """Stepsize ``1/k`` with ``gamma_0 = 1``."""
    return 1.0 if k == 0 else 1.0 / k


def power_schedule(exponent: float = 1.0, scale: float = 1.0) -> Callable[[int], float]:
    def gamma(k: int) -> float:
        return scale if k == 0 else scale / k**exponent

    return gamma


@dataclass
class BiasState:
    log_theta: np.ndarray
    phi: np.ndarray
    counts: np.ndarray
    nu: np.ndarray
    c: float = 0.5
    k: int = 0
    gamma_schedule: Callable[[int], float] = field(default=inverse_schedule)

    @classmethod
    def uniform(cls, d: int, c: float = 0.5, gamma_schedule=inverse_schedule) -> "BiasState":
        if not 0 < c <= 1:
            raise ValueError("flat-histogram tolerance c must lie in (0, 1]")
        return cls(
            log_theta=np.full(d, -np.log(d)),
            phi=np.full(d, 1.0 / d),
            counts=np.zeros(d, dtype=np.int64),
            nu=np.zeros(d),
            c=c,
            gamma_schedule=gamma_schedule,
        )

    @property
    def d(self) -> int:
        return self.log_theta.size

    @property
    def gamma(self) -> float:
        return float(self.gamma_schedule(self.k))

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    def refresh_nu(self) -> None:
        total = self.counts.sum()
        self.nu = self.counts / total if total > 0 else np.zeros(self.d)

    def reset_proportions(self) -> None:
        self.counts = np.zeros(self.d, dtype=np.int64)
        self.nu = np.zeros(self.d)

    def normalize(self) -> None:
        self.log_theta = self.log_theta - logsumexp(self.log_theta)

    def copy(self) -> "BiasState":
        return BiasState(
            self.log_theta.copy(), self.phi.copy(), self.counts.copy(), self.nu.copy(),
            self.c, self.k, self.gamma_schedule,
        )


def biased_log_density(log_pi, bins, bias: BiasState):
    """``log pi(x) - log theta(J(x))``: the flattened target up to a constant."""
    return np.asarray(log_pi) - bias.log_theta[bins]


def occupancy(bins, d: int) -> np.ndarray:
    """Number of chains in each bin."""
    return np.bincount(np.asarray(bins).ravel(), minlength=d)


def update_proportions(bias: BiasState, bins) -> None:
    bias.counts = bias.counts + occupancy(bins, bias.d)
    bias.refresh_nu()


def flat_histogram_check(bias: BiasState) -> bool:
    """``max_i |nu(i) - phi(i)| < c / d``."""
    return bool(np.max(np.abs(bias.nu - bias.phi)) < bias.c / bias.d)


def update_bias(
    bias: BiasState, proportions, n_steps: int = 1, normalize: bool = True, gamma: Optional[float] = None
) -> None:
    """Stochastic-approximation step on ``log theta``.

    ``proportions`` is the fraction of chains currently in each bin (or the sum
    of such fractions over ``n_steps`` iterations of a communication period).
    """
    step = bias.gamma if gamma is None else gamma
    bias.log_theta = bias.log_theta + step * (np.asarray(proportions) - n_steps * bias.phi)
    if normalize:
        bias.normalize()
