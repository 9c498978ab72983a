"""Seeded random streams.

Every run derives its generators from ``SeedSequence(seed, spawn_key=(role, j))``:
role 0 is the preliminary exploration, role 1 the main run, role 2 the SMC
sampler. Within a role, ``j = 0`` is the shared stream (initial states, shared
decisions) and ``j = 1..N`` are the private chain streams. A chain's draws thus
depend only on the seed and its own index, never on how many chains run or in
which order they are processed.
"""
from __future__ import annotations

import numpy as np

PRELIMINARY, MAIN, SMC = 0, 1, 2


def _generator(seed, role, j):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(role, j)))


def check_seed(seed) -> int:
    if seed is None:
        raise ValueError("a seed is required (runs are never unseeded)")
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


class ChainStreams:
    """One generator per chain behind a vectorized, Generator-like interface.

    The leading dimension of every requested ``size`` is the chain axis; row
    ``j`` of the result is drawn from chain ``j``'s own generator.
    """

    def __init__(self, generators):
        self.generators = list(generators)

    @classmethod
    def from_seed(cls, seed, role, n_chains):
        return cls(_generator(seed, role, j) for j in range(1, n_chains + 1))

    def __len__(self):
        return len(self.generators)

    def _rest(self, size):
        shape = (size,) if np.isscalar(size) else tuple(size)
        if shape[0] != len(self.generators):
            raise ValueError(f"leading size {shape[0]} does not match {len(self.generators)} chains")
        return shape[1:]

    def random(self, size):
        rest = self._rest(size)
        return np.stack([g.random(rest) for g in self.generators])

    def standard_normal(self, size):
        rest = self._rest(size)
        return np.stack([g.standard_normal(rest) for g in self.generators])

    def integers(self, low, high=None, size=None):
        rest = self._rest(size)
        return np.stack([g.integers(low, high, size=rest) for g in self.generators])


def run_streams(seed, role, n_chains):
    """``(shared_generator, chain_streams)`` for one stage of a run."""
    seed = check_seed(seed)
    return _generator(seed, role, 0), ChainStreams.from_seed(seed, role, n_chains)


def smc_generator(seed):
    return _generator(check_seed(seed), SMC, 0)
