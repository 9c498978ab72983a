"""The parallel adaptive Wang-Landau loop.

One iteration moves every chain once under the current biased density
``pi(x) / theta(J(x))``, then (behind a barrier) adapts the proposal, maintains
the bins, updates the visit proportions, checks for a flat histogram and pushes
the bias away from the bins the chains currently occupy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bias import BiasState, flat_histogram_check, inverse_schedule, occupancy, power_schedule, update_bias, update_proportions
from .binning import (
    BinPartition,
    ReactionCoordinate,
    extend_range,
    init_partition,
    locate_bin,
    maintenance_tick,
    merge_observed,
    record_within_bin,
)
from .proposals import FlipProposal, MixtureProposal, RandomWalkProposal
from .record import RunRecord
from .streams import MAIN, PRELIMINARY, run_streams
from .targets.base import TargetEvaluationError, TargetModel

logger = logging.getLogger(__name__)


@dataclass
class ChainEnsemble:
    states: np.ndarray
    log_density: np.ndarray
    xi: np.ndarray
    bin_index: np.ndarray
    # integer sufficient statistics, for targets that expose them
    stats: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return len(self.log_density)


class SweepOutcome(NamedTuple):
    fraction: float
    accepted: np.ndarray
    n_nonfinite: int


def initialize_ensemble(target: TargetModel, states, coordinate=None, partition=None) -> ChainEnsemble:
    """Evaluate starting states; a non-finite log-density aborts the run."""
    coordinate = coordinate or ReactionCoordinate()
    states = np.array(states, copy=True)
    stats = None
    if hasattr(target, "stats"):
        stats = target.stats(states)
        lp = np.asarray(target.log_density_from_stats(stats), dtype=float)
    else:
        lp = np.asarray(target.log_density(states), dtype=float)
    bad = np.flatnonzero(~np.isfinite(lp))
    if bad.size:
        j = int(bad[0])
        raise TargetEvaluationError(
            f"non-finite log-density {lp[j]} at the initial state of chain {j}: {np.array2string(states[j], threshold=20)}"
        )
    xi = coordinate(states, lp)
    bins = np.zeros(len(lp), dtype=np.int64) if partition is None else locate_bin(xi, partition)
    return ChainEnsemble(states, lp, xi, bins, stats)


def mh_sweep(
    ensemble: ChainEnsemble,
    target: TargetModel,
    proposal,
    rng,
    bias: Optional[BiasState] = None,
    partition: Optional[BinPartition] = None,
    coordinate=None,
) -> SweepOutcome:
    """One Metropolis-Hastings step for every chain; updates ``ensemble`` in place.

    Without ``bias`` this is plain MH on the target. Proposals whose
    log-density is not finite are rejected and counted.
    """
    coordinate = coordinate or ReactionCoordinate()
    current = ensemble.states
    n = ensemble.N
    proposed, idx = proposal.propose(current, rng)
    new_stats = None
    with np.errstate(invalid="ignore", over="ignore"):
        if idx is not None and ensemble.stats is not None:
            new_stats = ensemble.stats + target.stats_delta(current, idx)
            lp_new = np.asarray(target.log_density_from_stats(new_stats), dtype=float)
        elif idx is not None and hasattr(target, "flip_delta"):
            lp_new = ensemble.log_density + target.flip_delta(current, idx)
        else:
            lp_new = np.asarray(target.log_density(proposed), dtype=float)
        finite = np.isfinite(lp_new)
        log_ratio = np.where(finite, lp_new - ensemble.log_density, -np.inf)
        log_ratio = log_ratio + proposal.log_correction(current, proposed)
        xi_new = np.where(finite, coordinate(proposed, lp_new), ensemble.xi)
        if partition is not None:
            bins_new = locate_bin(xi_new, partition)
        else:
            bins_new = ensemble.bin_index
        if bias is not None:
            log_ratio = log_ratio + bias.log_theta[ensemble.bin_index] - bias.log_theta[bins_new]
    u = rng.random(n)
    accepted = finite & (np.log(u) < log_ratio)
    if accepted.any():
        ensemble.states[accepted] = proposed[accepted]
        ensemble.log_density[accepted] = lp_new[accepted]
        ensemble.xi[accepted] = xi_new[accepted]
        ensemble.bin_index[accepted] = bins_new[accepted]
        if new_stats is not None:
            ensemble.stats[accepted] = new_stats[accepted]
    return SweepOutcome(float(accepted.mean()), accepted, int(n - finite.sum()))


def make_proposal(kind: str, target: TargetModel, sigma0=1.0, adapt=True, target_rate=0.234, w2=0.05, sigma_I=None):
    if kind == "auto":
        if isinstance(target.default_proposal(sigma0, adapt, target_rate), MixtureProposal):
            return MixtureProposal(target.dim, sigma0, w2=w2, sigma_I=sigma_I, adapt=adapt)
        return target.default_proposal(sigma0, adapt, target_rate)
    if kind == "rw":
        return RandomWalkProposal(sigma0, adapt=adapt, target_rate=target_rate)
    if kind == "mixture":
        return MixtureProposal(target.dim, sigma0, w2=w2, sigma_I=sigma_I, adapt=adapt)
    if kind == "flip":
        return FlipProposal()
    raise ValueError(f"unknown proposal kind {kind!r}")


def run_mh(
    target: TargetModel,
    ensemble: ChainEnsemble,
    proposal,
    chains,
    n_iterations: int,
    coordinate=None,
    record: Optional[RunRecord] = None,
    thin: int = 10,
    collect_xi: bool = False,
):
    """Unbiased parallel adaptive MH; returns every visited xi when ``collect_xi``."""
    coordinate = coordinate or ReactionCoordinate()
    visited = [ensemble.xi.copy()] if collect_xi else None
    for t in range(1, n_iterations + 1):
        out = mh_sweep(ensemble, target, proposal, chains, coordinate=coordinate)
        proposal.adapt(ensemble.states, out.fraction, t)
        if collect_xi:
            visited.append(ensemble.xi.copy())
        if record is not None:
            record.n_evaluations += ensemble.N
            record.n_nonfinite += out.n_nonfinite
            record.acceptance.append((t, out.fraction, proposal.scale))
            record.observe_xi(ensemble.xi)
            if thin and t % thin == 0:
                record.add_samples(t, ensemble.states, ensemble.log_density, ensemble.xi, ensemble.bin_index)
    return np.concatenate(visited) if collect_xi else None


def _check_positive_int(name, value, allow_zero=False):
    ok = isinstance(value, (int, np.integer)) and not isinstance(value, bool) and (value >= 0 if allow_zero else value > 0)
    if not ok:
        raise ValueError(f"{name} must be a {'nonnegative' if allow_zero else 'positive'} integer, got {value!r}")


class PAWL(BaseEstimator):
    """Parallel adaptive Wang-Landau sampler.

    ``fit(target)`` runs the preliminary exploration (unless a bin range or a
    partition is supplied), builds the partition and runs the main loop.
    Fitted attributes: ``record_``, ``log_theta_``, ``partition_``,
    ``n_evaluations_``.
    """

    def __init__(
        self,
        n_chains=10,
        n_iterations=1000,
        n_bins=20,
        c=0.5,
        bin_range=None,
        expansion="quantile",
        factor=2.0,
        split_threshold=0.25,
        check_period=100,
        adaptive_binning=True,
        symmetric_split=False,
        communication_period=1,
        proposal="auto",
        adapt_proposal=True,
        freeze_proposal_after_fh=False,
        target_rate=0.234,
        sigma0=1.0,
        w2=0.05,
        sigma_I=None,
        gamma_exponent=1.0,
        prelim_iterations=1000,
        reaction_coordinate="energy",
        coordinate_index=0,
        thin=10,
        trace_every=1,
        normalize=True,
        random_state=None,
    ):
        self.n_chains = n_chains
        self.n_iterations = n_iterations
        self.n_bins = n_bins
        self.c = c
        self.bin_range = bin_range
        self.expansion = expansion
        self.factor = factor
        self.split_threshold = split_threshold
        self.check_period = check_period
        self.adaptive_binning = adaptive_binning
        self.symmetric_split = symmetric_split
        self.communication_period = communication_period
        self.proposal = proposal
        self.adapt_proposal = adapt_proposal
        self.freeze_proposal_after_fh = freeze_proposal_after_fh
        self.target_rate = target_rate
        self.sigma0 = sigma0
        self.w2 = w2
        self.sigma_I = sigma_I
        self.gamma_exponent = gamma_exponent
        self.prelim_iterations = prelim_iterations
        self.reaction_coordinate = reaction_coordinate
        self.coordinate_index = coordinate_index
        self.thin = thin
        self.trace_every = trace_every
        self.normalize = normalize
        self.random_state = random_state

    def _validate(self):
        _check_positive_int("n_chains", self.n_chains)
        _check_positive_int("n_iterations", self.n_iterations, allow_zero=True)
        _check_positive_int("n_bins", self.n_bins)
        _check_positive_int("communication_period", self.communication_period)
        _check_positive_int("check_period", self.check_period)
        _check_positive_int("prelim_iterations", self.prelim_iterations)
        _check_positive_int("thin", self.thin)
        _check_positive_int("trace_every", self.trace_every)
        if not 0 < self.c <= 1:
            raise ValueError(f"c must lie in (0, 1], got {self.c!r}")
        if not 0 < self.split_threshold < 0.5:
            raise ValueError("split_threshold must lie in (0, 0.5)")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if not 0 < self.target_rate < 1:
            raise ValueError("target_rate must lie in (0, 1)")
        if self.bin_range is not None and not float(self.bin_range[1]) > float(self.bin_range[0]):
            raise ValueError("bin_range must satisfy low < high")

    def _coordinate(self):
        return ReactionCoordinate(self.reaction_coordinate, self.coordinate_index)

    def _proposal(self, target):
        return make_proposal(
            self.proposal, target, self.sigma0, self.adapt_proposal, self.target_rate, self.w2, self.sigma_I
        )

    def fit(self, target: TargetModel, init_states=None, partition: Optional[BinPartition] = None):
        self._validate()
        N = self.n_chains
        coordinate = self._coordinate()
        record = RunRecord("pawl", target.name, N, self.n_iterations, target.discrete)

        if partition is None and self.bin_range is None:
            # preliminary exploration: unbiased adaptive MH from the initial sampler
            shared, chains = run_streams(self.random_state, PRELIMINARY, N)
            start = target.initial_states(N, shared) if init_states is None else init_states
            ensemble = initialize_ensemble(target, start, coordinate)
            visited = run_mh(target, ensemble, self._proposal(target), chains, self.prelim_iterations,
                             coordinate, collect_xi=True)
            record.n_preliminary_evaluations = N * self.prelim_iterations
            partition = init_partition(visited, self.n_bins, self.expansion, self.factor, discrete=target.discrete)
            states = ensemble.states
        else:
            shared, _ = run_streams(self.random_state, PRELIMINARY, 0)
            states = target.initial_states(N, shared) if init_states is None else init_states
            if partition is None:
                probe = initialize_ensemble(target, states, coordinate)
                partition = init_partition(probe.xi, self.n_bins, bin_range=self.bin_range, discrete=target.discrete)
            else:
                partition = partition.copy()
        record.initial_partition = partition.copy()

        _, chains = run_streams(self.random_state, MAIN, N)
        ensemble = initialize_ensemble(target, states, coordinate, partition)
        schedule = inverse_schedule if self.gamma_exponent == 1.0 else power_schedule(self.gamma_exponent)
        bias = BiasState.uniform(partition.d, self.c, schedule)
        proposal = self._proposal(target)
        # exposed early so a failing run still leaves its partial record behind
        self.record_ = record
        self._loop(target, ensemble, bias, partition, proposal, chains, coordinate, record)

        record.final_log_theta = bias.log_theta.copy()
        record.final_partition = partition
        record.n_evaluations += record.n_preliminary_evaluations
        self.record_ = record
        self.log_theta_ = bias.log_theta.copy()
        self.partition_ = partition
        self.bias_ = bias
        self.ensemble_ = ensemble
        self.proposal_ = proposal
        self.n_evaluations_ = record.n_evaluations
        return self

    def _loop(self, target, ens, bias, partition, proposal, chains, coordinate, record):
        N, m = ens.N, self.communication_period
        adaptive = self.adaptive_binning
        record.theta_trace.append((0, bias.log_theta.copy()))
        record.nu_trace.append((0, bias.nu.copy()))
        record.observe_xi(ens.xi)
        pending = []
        for t in range(1, self.n_iterations + 1):
            out = mh_sweep(ens, target, proposal, chains, bias, partition, coordinate)
            record.n_evaluations += N
            record.n_nonfinite += out.n_nonfinite

            if not (self.freeze_proposal_after_fh and bias.k > 0):
                proposal.adapt(ens.states, out.fraction, t)

            # widening the first bin is not a structural change, so it continues after freezing
            if extend_range(partition, ens.xi):
                record.boundary_events.append((t, "extend", partition.e_min, partition.d))
            if adaptive and not partition.frozen:
                merge_observed(partition, ens.xi)
                record_within_bin(partition, ens.xi, ens.bin_index)
                events = maintenance_tick(
                    partition, bias, t, self.check_period, bias.k > 0, self.split_threshold,
                    symmetric=self.symmetric_split,
                )
                for kind, value in events:
                    record.boundary_events.append((t, kind, value, partition.d))
                if any(kind == "split" for kind, _ in events):
                    ens.bin_index = locate_bin(ens.xi, partition)

            pending.append(ens.xi.copy())
            if t % m == 0:
                bins = locate_bin(np.concatenate(pending), partition)
                update_proportions(bias, bins)
                if flat_histogram_check(bias):
                    record.fh_times.append(t)
                    record.fh_records.append((t, float(np.max(np.abs(bias.nu - bias.phi))), bias.c / bias.d))
                    bias.k += 1
                    bias.reset_proportions()
                update_bias(bias, occupancy(bins, bias.d) / N, n_steps=len(pending), normalize=self.normalize)
                pending = []

            record.acceptance.append((t, out.fraction, proposal.scale))
            record.observe_xi(ens.xi)
            if t % self.trace_every == 0:
                record.theta_trace.append((t, bias.log_theta.copy()))
                record.nu_trace.append((t, bias.nu.copy()))
            if t % self.thin == 0:
                record.add_samples(t, ens.states, ens.log_density, ens.xi, ens.bin_index)

    @property
    def theta_(self):
        check_is_fitted(self, "log_theta_")
        return np.exp(self.log_theta_)


def wl_run(target: TargetModel, config: Optional[dict] = None, seed=None, **kwargs) -> RunRecord:
    """Run PAWL with the given settings and return its record."""
    params = dict(config or {})
    params.update(kwargs)
    if seed is not None:
        params["random_state"] = seed
    return PAWL(**params).fit(target).record_
