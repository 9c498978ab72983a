"""Run records and their CSV serialization.

Reals are written with 17 significant digits so files round-trip exactly;
nothing time-dependent goes into the CSVs (wall-clock time lives in the run
summary), so a fixed seed gives byte-identical files.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .binning import BinPartition


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass
class RunRecord:
    algorithm: str = "pawl"
    target: str = ""
    n_chains: int = 0
    n_iterations: int = 0
    discrete: bool = False
    theta_trace: list = field(default_factory=list)  # (t, log_theta)
    nu_trace: list = field(default_factory=list)  # (t, nu)
    boundary_events: list = field(default_factory=list)  # (t, kind, value, d)
    acceptance: list = field(default_factory=list)  # (t, fraction, scale)
    fh_times: list = field(default_factory=list)
    fh_records: list = field(default_factory=list)  # (t, max |nu - phi|, c/d)
    # thinned chain states
    sample_iterations: list = field(default_factory=list)
    sample_states: list = field(default_factory=list)
    sample_log_density: list = field(default_factory=list)
    sample_xi: list = field(default_factory=list)
    sample_bins: list = field(default_factory=list)
    sample_log_weights: Optional[np.ndarray] = None
    xi_min: float = np.inf
    xi_max: float = -np.inf
    final_log_theta: Optional[np.ndarray] = None
    final_partition: Optional[BinPartition] = None
    initial_partition: Optional[BinPartition] = None
    n_evaluations: int = 0
    n_preliminary_evaluations: int = 0
    n_nonfinite: int = 0
    n_resampling: int = 0
    extra: dict = field(default_factory=dict)

    def add_samples(self, t, states, log_density, xi, bins):
        self.sample_iterations.append(t)
        self.sample_states.append(np.array(states, copy=True))
        self.sample_log_density.append(np.array(log_density, dtype=float))
        self.sample_xi.append(np.array(xi, dtype=float))
        self.sample_bins.append(np.array(bins, dtype=np.int64))

    def observe_xi(self, xi):
        xi = np.asarray(xi, dtype=float)
        xi = xi[np.isfinite(xi)]
        if xi.size:
            self.xi_min = min(self.xi_min, float(xi.min()))
            self.xi_max = max(self.xi_max, float(xi.max()))

    # flat views over the thinned samples: one row per (iteration, chain)
    def samples(self):
        """``(iteration, chain, states, log_density, xi, bin)`` arrays."""
        if not self.sample_iterations:
            shape = (0,)
            return (np.empty(0, int), np.empty(0, int), np.empty(shape), np.empty(0), np.empty(0), np.empty(0, int))
        n = [len(s) for s in self.sample_log_density]
        it = np.repeat(np.asarray(self.sample_iterations), n)
        chain = np.concatenate([np.arange(k) for k in n])
        return (
            it,
            chain,
            np.concatenate(self.sample_states),
            np.concatenate(self.sample_log_density),
            np.concatenate(self.sample_xi),
            np.concatenate(self.sample_bins),
        )

    @property
    def acceptance_rate(self) -> float:
        if not self.acceptance:
            return np.nan
        return float(np.mean([a for _, a, _ in self.acceptance]))


def _write(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([r if isinstance(r, str) else fmt(r) for r in row])


def state_columns(record: RunRecord, states) -> tuple[list, list]:
    """Header and per-row cells for chain states.

    Discrete states become one bitstring column; continuous ones one column
    per coordinate.
    """
    states = np.asarray(states)
    flat = states.reshape(len(states), -1)
    if record.discrete:
        return ["state"], [["".join(map(str, row.astype(int)))] for row in flat]
    width = flat.shape[1] if flat.ndim == 2 else 0
    return [f"x{j + 1}" for j in range(width)], [list(map(float, row)) for row in flat]


def write_record(record: RunRecord, outdir, metrics: Optional[dict] = None) -> list[Path]:
    """Write the six per-run CSV files into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    p = outdir / "theta-trace.csv"
    _write(p, ["iteration", "bin", "log_theta"],
           ((t, i, v) for t, lt in record.theta_trace for i, v in enumerate(lt)))
    paths.append(p)

    p = outdir / "nu-trace.csv"
    _write(p, ["iteration", "bin", "nu"], ((t, i, v) for t, nu in record.nu_trace for i, v in enumerate(nu)))
    paths.append(p)

    p = outdir / "boundary-events.csv"
    _write(p, ["iteration", "event", "value", "n_bins"], ((t, kind, v, d) for t, kind, v, d in record.boundary_events))
    paths.append(p)

    p = outdir / "acceptance.csv"
    _write(p, ["iteration", "acceptance", "scale"], record.acceptance)
    paths.append(p)

    p = outdir / "samples.csv"
    it, chain, states, lp, xi, bins = record.samples()
    head, cells = state_columns(record, states) if len(it) else (["state"], [])
    weights = record.sample_log_weights
    header = ["iteration", "chain", "log_density", "xi", "bin"] + (["log_weight"] if weights is not None else []) + head
    rows = []
    for j in range(len(it)):
        row = [it[j], chain[j], lp[j], xi[j], bins[j]]
        if weights is not None:
            row.append(weights[j])
        rows.append(row + cells[j])
    _write(p, header, rows)
    paths.append(p)

    p = outdir / "metrics.csv"
    _write(p, ["metric", "value"], sorted((metrics or {}).items()))
    paths.append(p)
    return paths
