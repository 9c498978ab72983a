"""Partition of the reaction coordinate into bins, with adaptive splitting.

Bins are half-open intervals ``[e_{i-1}, e_i)``. The first bin reaches down to
the lowest value observed so far (``e_min``) and the last bin is unbounded
above. Indices are zero-based throughout.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

logger = logging.getLogger(__name__)

LOG2 = np.log(2.0)


@dataclass
class BinPartition:
    inner_boundaries: np.ndarray
    e_min: float
    frozen: bool = False
    # xi values in the upper half of each bin / all xi values in it, since the
    # bin was created. With xi the energy, the upper half is the low-density side.
    upper_counts: np.ndarray = None
    total_counts: np.ndarray = None
    # sorted distinct observed xi values; only tracked for discrete state spaces
    observed: Optional[np.ndarray] = None

    def __post_init__(self):
        self.inner_boundaries = np.asarray(self.inner_boundaries, dtype=float).ravel()
        if np.any(np.diff(self.inner_boundaries) <= 0):
            raise ValueError("inner boundaries must be strictly increasing")
        if self.d > 1:
            self.e_min = min(float(self.e_min), float(self.inner_boundaries[0]))
        if self.upper_counts is None:
            self.upper_counts = np.zeros(self.d, dtype=np.int64)
        if self.total_counts is None:
            self.total_counts = np.zeros(self.d, dtype=np.int64)

    @property
    def d(self) -> int:
        return self.inner_boundaries.size + 1

    def edges(self, i: int) -> tuple[float, float]:
        """Lower and upper edge of bin ``i`` (``inf`` for the last bin)."""
        lo = self.e_min if i == 0 else self.inner_boundaries[i - 1]
        hi = np.inf if i == self.d - 1 else self.inner_boundaries[i]
        return float(lo), float(hi)

    def midpoints(self) -> np.ndarray:
        lower = np.concatenate([[self.e_min], self.inner_boundaries])
        upper = np.concatenate([self.inner_boundaries, [np.inf]])
        return 0.5 * (lower + upper)

    def copy(self) -> "BinPartition":
        return BinPartition(
            self.inner_boundaries.copy(),
            self.e_min,
            self.frozen,
            self.upper_counts.copy(),
            self.total_counts.copy(),
            None if self.observed is None else self.observed.copy(),
        )


class ReactionCoordinate:
    """Scalar summary ``xi(x)`` used to bin states.

    ``kind`` is ``"energy"`` (``-log pi``, the default), ``"coordinate"``
    (projection on one continuous coordinate) or ``"custom"``.
    """

    def __init__(self, kind: str = "energy", index: int = 0, func: Callable = None):
        if kind not in ("energy", "coordinate", "custom"):
            raise ValueError(f"unknown reaction coordinate kind {kind!r}")
        if kind == "custom" and func is None:
            raise ValueError("custom reaction coordinate needs a function")
        self.kind = kind
        self.index = index
        self.func = func

    def __call__(self, states: np.ndarray, log_density: np.ndarray) -> np.ndarray:
        if self.kind == "energy":
            return -np.asarray(log_density, dtype=float)
        if self.kind == "coordinate":
            return np.asarray(states, dtype=float)[:, self.index].copy()
        return np.asarray(self.func(states), dtype=float)


def locate_bin(xi, partition: BinPartition):
    """Bin index of each ``xi`` value; ties at a boundary go to the right bin."""
    return np.searchsorted(partition.inner_boundaries, xi, side="right")


def init_partition(
    xi_samples,
    n_bins: int,
    expansion: str = "quantile",
    factor: float = 2.0,
    bin_range: Optional[tuple[float, float]] = None,
    discrete: bool = False,
) -> BinPartition:
    """Equal-width partition built from preliminary reaction-coordinate values.

    ``expansion="quantile"`` covers ``[q10, q10 + factor * (q90 - q10)]``;
    ``expansion="range"`` covers ``[min, min + factor * (max - min)]``.
    An explicit ``bin_range`` overrides both.
    """
    xi = np.asarray(xi_samples, dtype=float).ravel()
    xi = xi[np.isfinite(xi)]
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if bin_range is not None:
        lo, hi = map(float, bin_range)
        if not hi > lo:
            raise ValueError("bin_range must satisfy low < high")
        e_min = lo if xi.size == 0 else min(lo, xi.min())
    else:
        if xi.size == 0:
            raise ValueError("no finite reaction-coordinate samples")
        e_min = float(xi.min())
        if np.all(xi == xi[0]):
            warnings.warn("all preliminary values identical; using a single bin")
            return _with_observed(BinPartition(np.empty(0), e_min), xi, discrete)
        if expansion == "quantile":
            q10, q90 = np.quantile(xi, [0.1, 0.9])
            lo, hi = q10, q10 + factor * (q90 - q10)
        elif expansion == "range":
            lo, hi = xi.min(), xi.min() + factor * (xi.max() - xi.min())
        else:
            raise ValueError(f"unknown expansion {expansion!r}")
        if not hi > lo:
            warnings.warn("degenerate preliminary range; using a single bin")
            return _with_observed(BinPartition(np.empty(0), e_min), xi, discrete)
    inner = lo + (hi - lo) * np.arange(1, n_bins) / n_bins
    return _with_observed(BinPartition(inner, e_min), xi, discrete)


def _with_observed(partition, xi, discrete):
    if discrete:
        partition.observed = np.unique(xi)
    return partition


def split_check(left: int, total: int, threshold: float = 0.25, min_count: Optional[int] = None) -> bool:
    """True when fewer than ``threshold`` of a bin's ``total`` values lie on its sparse side.

    ``left`` counts the values on the low-density side of the bin's middle,
    i.e. the left half when the bin is drawn on the log-density axis (the
    upper half in energy). A chain piled up on the other side has trouble
    reaching the neighbouring bin beyond the sparse side.
    """
    if min_count is None:
        min_count = int(np.ceil(20.0 / threshold))
    if total < min_count or total == 0:
        return False
    return left / total < threshold


def split_point(partition: BinPartition, i: int) -> Optional[float]:
    """Where bin ``i`` would be cut, or ``None`` if it cannot be split."""
    lo, hi = partition.edges(i)
    if not np.isfinite(hi) or not hi > lo:
        return None
    mid = 0.5 * (lo + hi)
    if partition.observed is None:
        return mid
    obs = partition.observed
    inside = obs[(obs >= lo) & (obs < hi)]
    if inside.size < 2:
        return None
    # cut between the two consecutive distinct values closest to the midpoint
    j = np.searchsorted(inside, mid, side="right")
    j = min(max(j, 1), inside.size - 1)
    return 0.5 * (inside[j - 1] + inside[j])


def split_bin(partition: BinPartition, bias, i: int, at: Optional[float] = None) -> bool:
    """Replace bin ``i`` by two halves, each with half its weight and frequency.

    Mutates ``partition`` and ``bias`` in place; returns False (no-op) when the
    bin cannot be split.
    """
    if partition.frozen:
        return False
    cut = split_point(partition, i) if at is None else float(at)
    if cut is None:
        logger.debug("bin %d cannot be split", i)
        return False
    partition.inner_boundaries = np.insert(partition.inner_boundaries, i, cut)
    if i == 0:
        partition.e_min = min(partition.e_min, cut)
    for name in ("upper_counts", "total_counts"):
        arr = getattr(partition, name)
        setattr(partition, name, np.insert(arr, i, 0))
        getattr(partition, name)[i:i + 2] = 0

    bias.log_theta = np.insert(bias.log_theta, i, bias.log_theta[i])
    bias.log_theta[i:i + 2] -= LOG2
    bias.phi = np.insert(bias.phi, i, bias.phi[i])
    bias.phi[i:i + 2] *= 0.5
    n = bias.counts[i]
    bias.counts = np.insert(bias.counts, i, 0)
    bias.counts[i] = n - n // 2
    bias.counts[i + 1] = n // 2
    bias.refresh_nu()
    return True


def extend_range(partition: BinPartition, new_xi) -> bool:
    """Lower ``e_min`` to include ``new_xi``; returns True if it moved."""
    low = float(np.min(new_xi))
    if low < partition.e_min:
        partition.e_min = low
        return True
    return False


def record_within_bin(partition: BinPartition, xi: np.ndarray, bins: np.ndarray) -> None:
    """Accumulate the within-bin histogram counts used by the split rule.

    A value counts as upper when it is at or above its bin's middle (the
    unbounded last bin never has upper values and is never split).
    """
    mids = partition.midpoints()
    upper = xi >= mids[bins]
    partition.total_counts += np.bincount(bins, minlength=partition.d)
    partition.upper_counts += np.bincount(bins, weights=upper, minlength=partition.d).astype(np.int64)


def maintenance_tick(
    partition: BinPartition,
    bias,
    t: int,
    period: int,
    fh_reached: bool,
    threshold: float = 0.25,
    min_count: Optional[int] = None,
    symmetric: bool = False,
) -> list[tuple[str, float]]:
    """Periodic split check; freezes the partition once a flat histogram was seen.

    Returns the list of ``("split", cut)`` / ``("freeze", nan)`` events applied.
    """
    events = []
    if partition.frozen:
        return events
    if fh_reached:
        partition.frozen = True
        events.append(("freeze", np.nan))
        return events
    if period <= 0 or t % period:
        return events
    # highest index first so earlier indices stay valid while inserting
    for i in range(partition.d - 2, -1, -1):
        sparse, total = int(partition.upper_counts[i]), int(partition.total_counts[i])
        if symmetric:
            sparse = min(sparse, total - sparse)
        if split_check(sparse, total, threshold, min_count):
            cut = split_point(partition, i)
            if cut is not None and split_bin(partition, bias, i, at=cut):
                events.append(("split", cut))
    return events


def merge_observed(partition: BinPartition, xi: np.ndarray) -> None:
    if partition.observed is not None:
        partition.observed = np.union1d(partition.observed, xi[np.isfinite(xi)])


class EnergyBinner(TransformerMixin, BaseEstimator):
    """Transformer wrapping :func:`init_partition` and :func:`locate_bin`.

    ``fit`` takes preliminary reaction-coordinate values, ``transform`` maps
    values to zero-based bin indices.
    """

    def __init__(self, n_bins=20, expansion="quantile", factor=2.0, bin_range=None):
        self.n_bins = n_bins
        self.expansion = expansion
        self.factor = factor
        self.bin_range = bin_range

    def fit(self, X, y=None):
        self.partition_ = init_partition(
            np.asarray(X, dtype=float).ravel(), self.n_bins, self.expansion, self.factor, self.bin_range
        )
        self.n_bins_ = self.partition_.d
        return self

    def transform(self, X):
        check_is_fitted(self, "partition_")
        return locate_bin(np.asarray(X, dtype=float).ravel(), self.partition_)
