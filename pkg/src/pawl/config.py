"""Experiment configuration: INI files with dotted ``section.key`` names.

Every key has a type, a default and a help string; the same table drives the
command-line flags (``--sampler.n_chains 10``) and validation.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    """Invalid configuration field; raised before any computation."""


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


def _optional_str(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return str(text)


@dataclass(frozen=True)
class Field:
    kind: Callable[[Any], Any]
    default: Any
    help: str


ALGORITHMS = ("pawl", "pamh", "tempered-mh", "smc")
TARGET_NAMES = ("trimodal", "gprior", "mixture", "ising", "bimodal1d")

SCHEMA: dict[str, Field] = {
    "experiment.algorithm": Field(str, "pawl", f"one of {', '.join(ALGORITHMS)}"),
    "experiment.seed": Field(int, None, "random seed (required)"),
    "experiment.output_dir": Field(_optional_str, None, "artifact directory (default: $PAWL_OUTPUT_ROOT/<target>-<algorithm>-seed<seed>)"),
    "experiment.burn_in": Field(float, 0.5, "fraction of recorded samples dropped before computing metrics"),
    "target.name": Field(str, "trimodal", f"one of {', '.join(TARGET_NAMES)}"),
    "target.data": Field(_optional_str, None, "data file (pollution CSV, mixture values, or 0/1 grid image)"),
    "target.g": Field(_optional_float, None, "g-prior scale g (default e^20) or mixture hyperparameter g (default 0.2)"),
    "target.components": Field(int, 4, "number of mixture components K"),
    "target.init_kappa": Field(_optional_float, None, "precision of the mixture means in the initial distribution (1.0: concentrated start)"),
    "target.init_scale": Field(float, 0.1, "variance of the trimodal starting distribution N(0, s I)"),
    "target.alpha": Field(float, 1.0, "Ising pixel-agreement weight"),
    "target.beta": Field(float, 0.7, "Ising neighbour-agreement weight"),
    "sampler.n_chains": Field(int, 10, "number of chains N"),
    "sampler.n_iterations": Field(int, 1000, "iterations T"),
    "sampler.c": Field(float, 0.5, "flat-histogram tolerance c in (0, 1]"),
    "sampler.gamma_exponent": Field(float, 1.0, "stepsize gamma_k = 1/k^a"),
    "sampler.communication_period": Field(int, 1, "bias updates every m iterations"),
    "sampler.prelim_iterations": Field(int, 1000, "preliminary MH iterations used to place the bins"),
    "sampler.temperature": Field(float, 1.0, "temperature tau for tempered-mh"),
    "sampler.thin": Field(int, 10, "store chain states every this many iterations"),
    "sampler.trace_every": Field(int, 1, "store theta and nu every this many iterations"),
    "sampler.normalize": Field(_bool, True, "normalize theta after every update"),
    "binning.n_bins": Field(int, 20, "initial number of bins d_0"),
    "binning.low": Field(_optional_float, None, "manual lower end of the bin range (skips the preliminary run)"),
    "binning.high": Field(_optional_float, None, "manual upper end of the bin range"),
    "binning.expansion": Field(str, "quantile", "quantile: [q10, q10 + f(q90 - q10)]; range: [min, min + f(max - min)]"),
    "binning.factor": Field(float, 2.0, "range expansion factor f"),
    "binning.adaptive": Field(_bool, True, "split bins until the first flat histogram"),
    "binning.split_threshold": Field(float, 0.25, "split when the fraction of a bin's values in its upper (low-density) half is below this"),
    "binning.check_period": Field(int, 100, "split check every tau iterations"),
    "binning.symmetric": Field(_bool, False, "also split bins whose lower half is sparse"),
    "proposal.kind": Field(str, "auto", "auto, rw, mixture or flip"),
    "proposal.sigma0": Field(float, 1.0, "initial random-walk standard deviation"),
    "proposal.adapt": Field(_bool, True, "adapt the proposal"),
    "proposal.target_rate": Field(float, 0.234, "target acceptance rate"),
    "proposal.w2": Field(float, 0.05, "weight of the isotropic safety-net component"),
    "proposal.sigma_I": Field(_optional_float, None, "safety-net scale (default 10 sigma0)"),
    "proposal.freeze_after_fh": Field(_bool, False, "stop adapting the proposal after the first flat histogram"),
    "smc.n_particles": Field(int, 10000, "particles M"),
    "smc.n_temperatures": Field(int, 100, "annealing steps K"),
    "smc.ess_threshold": Field(float, 0.9, "resample when ESS < threshold * M"),
    "smc.n_moves": Field(int, 5, "MH moves after each resampling"),
    "smc.scale_fraction": Field(float, 0.1, "move covariance = fraction * particle covariance"),
    "smc.p0_mean": Field(float, 4.0, "mean (every coordinate) of the Gaussian p0 for targets without a prior"),
    "smc.p0_scale": Field(float, 5.0, "standard deviation of the Gaussian p0 for targets without a prior"),
}


def defaults() -> dict:
    return {k: f.default for k, f in SCHEMA.items()}


def coerce(key: str, value):
    if key not in SCHEMA:
        raise ConfigError(f"unknown configuration key {key!r}")
    if value is None:
        return None
    try:
        return SCHEMA[key].kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def read_config(path) -> dict:
    """Parse an INI file into dotted keys (values coerced, unknown keys rejected)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[f"{section}.{key}"] = coerce(f"{section}.{key}", value)
    return out


def write_config(config: dict, path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for key in sorted(config):
        section, name = key.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, "none" if config[key] is None else str(config[key]))
    with open(path, "w") as fh:
        parser.write(fh)


def build_config(path=None, overrides=None) -> dict:
    config = defaults()
    if path is not None:
        config.update(read_config(path))
    for key, value in (overrides or {}).items():
        config[key] = coerce(key, value)
    validate(config)
    return config


def validate(config: dict) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg} (got {config.get(key)!r})")

    for key in config:
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
    seed = config["experiment.seed"]
    need(seed is not None, "experiment.seed", "a seed is required")
    need(seed >= 0, "experiment.seed", "must be nonnegative")
    need(config["experiment.algorithm"] in ALGORITHMS, "experiment.algorithm", f"must be one of {ALGORITHMS}")
    need(config["target.name"] in TARGET_NAMES, "target.name", f"must be one of {TARGET_NAMES}")
    need(0 <= config["experiment.burn_in"] < 1, "experiment.burn_in", "must lie in [0, 1)")
    for key in ("sampler.n_chains", "sampler.communication_period", "sampler.prelim_iterations", "sampler.thin",
                "sampler.trace_every", "binning.n_bins", "binning.check_period", "smc.n_particles",
                "smc.n_temperatures", "target.components"):
        need(config[key] > 0, key, "must be positive")
    need(config["sampler.n_iterations"] >= 0, "sampler.n_iterations", "must be nonnegative")
    need(config["smc.n_moves"] >= 0, "smc.n_moves", "must be nonnegative")
    need(0 < config["sampler.c"] <= 1, "sampler.c", "must lie in (0, 1]")
    need(config["sampler.temperature"] >= 1, "sampler.temperature", "must be >= 1")
    need(0 < config["binning.split_threshold"] < 0.5, "binning.split_threshold", "must lie in (0, 0.5)")
    need(config["binning.expansion"] in ("quantile", "range"), "binning.expansion", "must be quantile or range")
    need(config["binning.factor"] > 0, "binning.factor", "must be positive")
    need(config["proposal.kind"] in ("auto", "rw", "mixture", "flip"), "proposal.kind", "must be auto, rw, mixture or flip")
    need(config["proposal.sigma0"] > 0, "proposal.sigma0", "must be positive")
    need(0 < config["proposal.target_rate"] < 1, "proposal.target_rate", "must lie in (0, 1)")
    need(0 <= config["proposal.w2"] <= 1, "proposal.w2", "must lie in [0, 1]")
    need(0 < config["smc.ess_threshold"] <= 1, "smc.ess_threshold", "must lie in (0, 1]")
    need(config["smc.scale_fraction"] > 0, "smc.scale_fraction", "must be positive")
    low, high = config["binning.low"], config["binning.high"]
    need((low is None) == (high is None), "binning.high", "binning.low and binning.high must be given together")
    if low is not None:
        need(high > low, "binning.high", "must exceed binning.low")
    if config["target.data"] is not None:
        need(Path(config["target.data"]).exists(), "target.data", "file does not exist")
