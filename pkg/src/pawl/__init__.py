"""Parallel adaptive Wang-Landau sampling with benchmark targets and baselines."""
__version__ = "0.1.0"

from .baselines import PAMH, GaussianReference, TemperedSMC, ess, systematic_resample
from .bias import BiasState, biased_log_density, flat_histogram_check, update_bias, update_proportions
from .binning import BinPartition, EnergyBinner, ReactionCoordinate, init_partition, locate_bin, split_bin
from .diagnostics import WeightedSample, energy_range, mixture_error, mode_occupancy, reweight, theta_error
from .engine import PAWL, ChainEnsemble, mh_sweep, wl_run
from .proposals import CovarianceAdapter, FlipProposal, MixtureProposal, RandomWalkProposal, ScaleAdapter
from .record import RunRecord

__all__ = [
    "PAMH", "PAWL", "BiasState", "BinPartition", "ChainEnsemble", "CovarianceAdapter", "EnergyBinner",
    "FlipProposal", "GaussianReference", "MixtureProposal", "RandomWalkProposal", "ReactionCoordinate",
    "RunRecord", "ScaleAdapter", "TemperedSMC", "WeightedSample", "biased_log_density", "energy_range", "ess",
    "flat_histogram_check", "init_partition", "locate_bin", "mh_sweep", "mixture_error", "mode_occupancy",
    "reweight", "split_bin", "systematic_resample", "theta_error", "update_bias", "update_proportions", "wl_run",
]
