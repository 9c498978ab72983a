from __future__ import annotations

import numpy as np

from ..proposals import FlipProposal, RandomWalkProposal


class TargetEvaluationError(RuntimeError):
    """Raised when a starting state has a non-finite log-density."""


class TargetModel:
    """Unnormalized target density over a batch of states.

    Subclasses implement ``log_density(states)`` for an array whose first axis
    indexes chains, and ``initial_states(n, rng)``. Discrete targets with
    single-site moves may also provide ``flip_delta(states, index)``, or the
    integer sufficient-statistic triple ``stats`` / ``stats_delta`` /
    ``log_density_from_stats`` for exact incremental updates.
    """

    discrete = False
    state_shape: tuple = ()
    name = "target"

    def log_density(self, states) -> np.ndarray:
        raise NotImplementedError

    def initial_states(self, n: int, rng) -> np.ndarray:
        raise NotImplementedError

    def default_proposal(self, sigma0: float = 1.0, adapt: bool = True, target_rate: float = 0.234):
        if self.discrete:
            return FlipProposal()
        return RandomWalkProposal(sigma0, adapt=adapt, target_rate=target_rate)

    @property
    def dim(self) -> int:
        return int(np.prod(self.state_shape))


class TemperedTarget(TargetModel):
    """``pi^(1/tau)``: divides the wrapped log-density by the temperature."""

    def __init__(self, target: TargetModel, tau: float):
        if tau < 1:
            raise ValueError("temperature must be >= 1")
        self.target = target
        self.tau = float(tau)
        self.discrete = target.discrete
        self.state_shape = target.state_shape
        self.name = f"{target.name}^(1/{tau:g})"
        if hasattr(target, "flip_delta"):
            self.flip_delta = lambda states, idx: target.flip_delta(states, idx) / self.tau
        if hasattr(target, "stats"):
            self.stats = target.stats
            self.stats_delta = target.stats_delta
            self.log_density_from_stats = lambda stats: target.log_density_from_stats(stats) / self.tau

    def log_density(self, states):
        return tempered_log_density(self.target, states, self.tau)

    def initial_states(self, n, rng):
        return self.target.initial_states(n, rng)

    def default_proposal(self, *args, **kwargs):
        return self.target.default_proposal(*args, **kwargs)


def tempered_log_density(target: TargetModel, states, tau: float):
    return target.log_density(states) / tau
