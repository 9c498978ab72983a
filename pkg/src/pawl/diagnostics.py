"""Post-run inference: reweighting, error metrics and exploration summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._math import logsumexp
from .binning import locate_bin
from .record import RunRecord

MU_STAR = 1.5
TRIMODAL_CENTERS = np.array([[8.0, 8.0], [6.0, 6.0], [0.0, 0.0]])


@dataclass
class WeightedSample:
    states: np.ndarray
    weights: np.ndarray
    source: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size and (np.any(w < 0) or not np.isfinite(w).all()):
            raise ValueError("weights must be finite and nonnegative")
        self.weights = w / w.sum() if w.size else w

    def mean(self) -> np.ndarray:
        flat = np.asarray(self.states, dtype=float).reshape(len(self.weights), -1)
        return self.weights @ flat


def _burn_in_mask(iterations, burn_in):
    """Keep samples recorded after the burn-in.

    A float in ``[0, 1)`` drops that fraction of the recorded iterations; an
    integer drops that many recorded iterations.
    """
    unique = np.unique(iterations)
    if isinstance(burn_in, (float, np.floating)):
        if not 0 <= burn_in < 1:
            raise ValueError("fractional burn_in must lie in [0, 1)")
        n_drop = int(np.floor(burn_in * unique.size))
    else:
        n_drop = int(burn_in)
    if n_drop >= unique.size:
        raise ValueError("no samples left after burn-in")
    cutoff = unique[n_drop]
    return iterations >= cutoff


def reweight(record: RunRecord, burn_in=0.5) -> WeightedSample:
    """Importance weights correcting a run back to the target.

    PAWL samples get ``theta_T`` of the bin their reaction coordinate falls in
    under the final partition; SMC samples carry their own weights; plain MH
    samples get equal weights.
    """
    it, _, states, _, xi, _ = record.samples()
    if it.size == 0:
        raise ValueError("record holds no samples")
    if record.sample_log_weights is not None:
        log_w = np.asarray(record.sample_log_weights, dtype=float)
        keep = np.ones(it.size, dtype=bool)
    else:
        keep = _burn_in_mask(it, burn_in)
        if record.algorithm == "pawl" and record.final_partition is not None:
            bins = locate_bin(xi[keep], record.final_partition)
            log_w = record.final_log_theta[bins]
        else:
            log_w = np.zeros(int(keep.sum()))
    log_w = log_w - logsumexp(log_w)
    return WeightedSample(states[keep], np.exp(log_w), record.algorithm)


def align_log(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v - logsumexp(v)


def theta_error(log_theta, log_psi) -> float:
    """``max_i |log theta(i) - log psi(i)|`` after normalizing both."""
    log_theta = np.asarray(log_theta, dtype=float)
    log_psi = np.asarray(log_psi, dtype=float)
    if log_theta.shape != log_psi.shape:
        raise ValueError(f"dimension mismatch: {log_theta.shape} vs {log_psi.shape}")
    return float(np.max(np.abs(align_log(log_theta) - align_log(log_psi))))


def theta_error_trace(record: RunRecord, log_psi) -> list:
    """``(iteration, theta_error)`` for every stored trace entry of matching size."""
    d = np.size(log_psi)
    return [(t, theta_error(lt, log_psi)) for t, lt in record.theta_trace if lt.size == d]


def component_means(sample: WeightedSample, K=4) -> np.ndarray:
    """Weighted means of the ``mu_k`` slots of mixture states."""
    mu = np.asarray(sample.states, dtype=float)[:, K:2 * K]
    return sample.weights @ mu


def mixture_error(sample: WeightedSample, K=4, mu_star=MU_STAR) -> float:
    """``sqrt(sum_k (mu_hat_k - mu_star)^2)``."""
    mu_hat = component_means(sample, K)
    return float(np.sqrt(np.sum((mu_hat - mu_star) ** 2)))


def mode_occupancy(sample: WeightedSample, centers=TRIMODAL_CENTERS, radius=2.0) -> np.ndarray:
    """Weight within ``radius`` of each center (nearest center wins), plus the remainder."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    x = np.asarray(sample.states, dtype=float).reshape(len(sample.weights), -1)
    dist = np.linalg.norm(x[:, None, :] - centers[None, :, :], axis=2)
    nearest = dist.argmin(axis=1)
    inside = dist[np.arange(len(x)), nearest] < radius
    occ = np.array([sample.weights[inside & (nearest == k)].sum() for k in range(len(centers))])
    return np.append(occ, 1.0 - occ.sum())


def mean_state(records, burn_in=0.5) -> np.ndarray:
    """Per-pixel weighted average of the (reweighted) recorded states."""
    if isinstance(records, RunRecord):
        records = [records]
    total, mass = None, 0.0
    for r in records:
        s = reweight(r, burn_in)
        avg = np.tensordot(s.weights, np.asarray(s.states, dtype=float), axes=1)
        total = avg if total is None else total + avg
        mass += 1.0
    return total / mass


def energy_range(record: RunRecord) -> tuple[float, float]:
    """Lowest and highest reaction-coordinate value seen during the run."""
    return record.xi_min, record.xi_max


def energy_width(record: RunRecord) -> float:
    lo, hi = energy_range(record)
    return hi - lo


def summary_metrics(record: RunRecord, burn_in=0.5, log_psi=None) -> dict:
    """Metrics written to ``metrics.csv`` for any run."""
    lo, hi = energy_range(record)
    out = {
        "n_evaluations": record.n_evaluations,
        "n_nonfinite": record.n_nonfinite,
        "xi_min": lo,
        "xi_max": hi,
        "energy_width": hi - lo,
        "acceptance_rate": record.acceptance_rate,
        "n_fh": len(record.fh_times),
        "n_splits": sum(1 for e in record.boundary_events if e[1] == "split"),
        "n_resampling": record.n_resampling,
    }
    if record.final_log_theta is not None:
        out["n_bins"] = int(np.size(record.final_log_theta))
    if log_psi is not None and np.size(log_psi) == np.size(record.final_log_theta):
        out["theta_error"] = theta_error(record.final_log_theta, log_psi)
    has_samples = bool(record.sample_iterations)
    if has_samples and record.target == "mixture":
        s = reweight(record, burn_in)
        for k, m in enumerate(component_means(s), start=1):
            out[f"mu_hat_{k}"] = float(m)
        out["mixture_error"] = mixture_error(s)
    if has_samples and record.target == "trimodal":
        occ = mode_occupancy(reweight(record, burn_in))
        for k, v in enumerate(occ[:-1], start=1):
            out[f"mode_{k}"] = float(v)
        out["mode_remainder"] = float(occ[-1])
    return out
