"""Small numeric helpers used on hot paths."""
from __future__ import annotations

import numpy as np


def logsumexp(a, axis=None):
    """``log(sum(exp(a)))`` without the overhead of the general scipy routine.

    Handles all ``-inf`` inputs (returns ``-inf``); does not support weights.
    """
    a = np.asarray(a, dtype=float)
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - top), axis=axis, keepdims=True)) + top
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)
