from __future__ import annotations

import numpy as np

from .._math import logsumexp
from .base import TargetModel

MEANS = np.array([[8.0, 8.0], [6.0, 6.0], [0.0, 0.0]])
COVS = np.array([
    [[1.0, 0.9], [0.9, 1.0]],
    [[1.0, -0.9], [-0.9, 1.0]],
    [[1.0, 0.0], [0.0, 1.0]],
])


class TrimodalTarget(TargetModel):
    """Equal-weight mixture of three bivariate Gaussians with distinct correlations.

    Chains start from ``N(0, init_scale * I)``, i.e. inside the mode at the origin.
    """

    state_shape = (2,)
    name = "trimodal"

    def __init__(self, init_scale=0.1):
        self.init_scale = init_scale
        self.means = MEANS.copy()
        self._prec = np.linalg.inv(COVS)
        self._log_norm = np.log(1.0 / 3.0) - np.log(2 * np.pi) - 0.5 * np.log(np.linalg.det(COVS))

    def log_density(self, states):
        x = np.atleast_2d(np.asarray(states, dtype=float))
        diff = x[:, None, :] - self.means[None, :, :]
        quad = np.einsum("nki,kij,nkj->nk", diff, self._prec, diff)
        return logsumexp(self._log_norm[None, :] - 0.5 * quad, axis=1)

    def initial_states(self, n, rng):
        return rng.standard_normal((n, 2)) * np.sqrt(self.init_scale)


def trimodal_log_density(x):
    return TrimodalTarget().log_density(np.atleast_2d(x))
