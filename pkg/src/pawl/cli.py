"""Command-line harness: ``pawl run | compare | enumerate-psi | generate-data``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import PAMH, GaussianReference, TemperedSMC
from .binning import init_partition
from .config import SCHEMA, ConfigError, build_config, validate, write_config
from .diagnostics import summary_metrics
from .engine import PAWL
from .record import fmt, write_record
from .targets import (
    Bimodal1D,
    GPriorTarget,
    IsingTarget,
    MixturePosteriorTarget,
    TrimodalTarget,
    enumerate_psi,
    generate_icefloe_image,
    generate_mixture_data,
    load_grid_image,
    load_mixture_data,
    load_pollution_data,
)
from .targets.io import generate_pollution_standin, save_grid_image, save_pollution, save_values

logger = logging.getLogger("pawl")

OUTPUT_ROOT_ENV = "PAWL_OUTPUT_ROOT"
SUMMARY_NAME = "run-summary.json"
FAILURE_MARKER = "FAILED"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class RunFailure(RuntimeError):
    pass


def make_target(config: dict):
    name, data = config["target.name"], config["target.data"]
    if name == "trimodal":
        return TrimodalTarget(init_scale=config["target.init_scale"])
    if name == "gprior":
        X, y = load_pollution_data(data) if data else (None, None)
        g = config["target.g"]
        return GPriorTarget(X, y) if g is None else GPriorTarget(X, y, g=g)
    if name == "mixture":
        y = load_mixture_data(data) if data else None
        g = 0.2 if config["target.g"] is None else config["target.g"]
        return MixturePosteriorTarget(y, K=config["target.components"], g=g, init_kappa=config["target.init_kappa"])
    if name == "ising":
        image = load_grid_image(data) if data else None
        return IsingTarget(image, alpha=config["target.alpha"], beta=config["target.beta"])
    if name == "bimodal1d":
        return Bimodal1D()
    raise ConfigError(f"target.name: unknown target {name!r}")


def make_estimator(config: dict, target):
    alg = config["experiment.algorithm"]
    seed = config["experiment.seed"]
    prop = dict(
        proposal=config["proposal.kind"],
        adapt_proposal=config["proposal.adapt"],
        target_rate=config["proposal.target_rate"],
        sigma0=config["proposal.sigma0"],
        w2=config["proposal.w2"],
        sigma_I=config["proposal.sigma_I"],
    )
    if alg == "pawl":
        low, high = config["binning.low"], config["binning.high"]
        return PAWL(
            n_chains=config["sampler.n_chains"],
            n_iterations=config["sampler.n_iterations"],
            n_bins=config["binning.n_bins"],
            c=config["sampler.c"],
            bin_range=None if low is None else (low, high),
            expansion=config["binning.expansion"],
            factor=config["binning.factor"],
            split_threshold=config["binning.split_threshold"],
            check_period=config["binning.check_period"],
            adaptive_binning=config["binning.adaptive"],
            symmetric_split=config["binning.symmetric"],
            communication_period=config["sampler.communication_period"],
            freeze_proposal_after_fh=config["proposal.freeze_after_fh"],
            gamma_exponent=config["sampler.gamma_exponent"],
            prelim_iterations=config["sampler.prelim_iterations"],
            thin=config["sampler.thin"],
            trace_every=config["sampler.trace_every"],
            normalize=config["sampler.normalize"],
            random_state=seed,
            **prop,
        )
    if alg in ("pamh", "tempered-mh"):
        temperature = config["sampler.temperature"] if alg == "tempered-mh" else 1.0
        return PAMH(
            n_chains=config["sampler.n_chains"],
            n_iterations=config["sampler.n_iterations"],
            temperature=temperature,
            thin=config["sampler.thin"],
            random_state=seed,
            **prop,
        )
    if alg == "smc":
        if target.discrete:
            raise ConfigError("experiment.algorithm: smc needs a continuous target")
        return TemperedSMC(
            n_particles=config["smc.n_particles"],
            n_temperatures=config["smc.n_temperatures"],
            ess_threshold=config["smc.ess_threshold"],
            n_moves=config["smc.n_moves"],
            scale_fraction=config["smc.scale_fraction"],
            random_state=seed,
        )
    raise ConfigError(f"experiment.algorithm: unknown algorithm {alg!r}")


def smc_reference(config: dict, target):
    if hasattr(target, "initial_distribution"):
        return target.initial_distribution()
    p = target.dim
    return GaussianReference(np.full(p, config["smc.p0_mean"]), np.eye(p) * config["smc.p0_scale"] ** 2)


def output_dir(config: dict) -> Path:
    if config["experiment.output_dir"]:
        return Path(config["experiment.output_dir"])
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{config['target.name']}-{config['experiment.algorithm']}-seed{config['experiment.seed']}"


def run_experiment(config: dict) -> Path:
    """Run one configured experiment and write its artifacts; returns the directory."""
    validate(config)
    target = make_target(config)
    estimator = make_estimator(config, target)
    outdir = output_dir(config)
    outdir.mkdir(parents=True, exist_ok=True)
    marker = outdir / FAILURE_MARKER
    if marker.exists():
        marker.unlink()
    write_config(config, outdir / "config.ini")

    start = time.perf_counter()
    try:
        if isinstance(estimator, TemperedSMC):
            estimator.fit(target, smc_reference(config, target))
        else:
            estimator.fit(target)
    except Exception as exc:
        wall = time.perf_counter() - start
        record = getattr(estimator, "record_", None)
        if record is not None:
            write_record(record, outdir, {"failed": 1})
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        _write_summary(outdir, config, record, wall, status="failed", error=str(exc))
        raise RunFailure(f"{type(exc).__name__}: {exc}") from exc
    wall = time.perf_counter() - start

    record = estimator.record_
    log_psi = None
    if isinstance(target, GPriorTarget) and config["experiment.algorithm"] == "pawl":
        log_psi = enumerate_psi(target, record.final_partition)
    metrics = summary_metrics(record, config["experiment.burn_in"], log_psi)
    write_record(record, outdir, metrics)
    _write_summary(outdir, config, record, wall)
    return outdir


def _write_summary(outdir, config, record, wall, status="ok", error=None):
    summary = {
        "status": status,
        "version": __version__,
        "algorithm": config["experiment.algorithm"],
        "target": config["target.name"],
        "seed": config["experiment.seed"],
        "wall_time_seconds": wall,
        "config": {k: config[k] for k in sorted(config)},
    }
    if record is not None:
        summary.update(
            n_evaluations=record.n_evaluations,
            n_preliminary_evaluations=record.n_preliminary_evaluations,
            n_nonfinite=record.n_nonfinite,
            n_resampling=record.n_resampling,
            n_flat_histograms=len(record.fh_times),
        )
    if error is not None:
        summary["error"] = error
    with open(Path(outdir) / SUMMARY_NAME, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["metric"]] = float(row["value"])
    return out


def compare_runs(dirs, out_path=None) -> list[dict]:
    """One row per run plus per-algorithm medians; optionally written as CSV."""
    dirs = [Path(d) for d in dirs]
    if not dirs:
        raise ValueError("no run directories given")
    rows = []
    for d in dirs:
        summary_path = d / SUMMARY_NAME
        if not summary_path.exists():
            raise ValueError(f"{d}: not a run directory (missing {SUMMARY_NAME})")
        summary = json.loads(summary_path.read_text())
        row = {"run": str(d), "algorithm": summary["algorithm"], "target": summary["target"],
               "seed": summary["seed"], "wall_time_seconds": summary["wall_time_seconds"]}
        row.update(read_metrics(d / "metrics.csv"))
        rows.append(row)
    targets = {r["target"] for r in rows}
    if len(targets) > 1:
        raise ValueError(f"runs mix targets: {sorted(targets)}")
    skip = {"run", "algorithm", "target", "seed"}
    metrics = sorted({k for r in rows for k in r if k not in skip})
    for alg in sorted({r["algorithm"] for r in rows}):
        sub = [r for r in rows if r["algorithm"] == alg]
        median = {"run": "median", "algorithm": alg, "target": rows[0]["target"], "seed": ""}
        for m in metrics:
            vals = [r[m] for r in sub if m in r]
            median[m] = float(np.median(vals)) if vals else ""
        rows.append(median)
    if out_path is not None:
        header = ["run", "algorithm", "target", "seed"] + metrics
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([r.get(k, "") if isinstance(r.get(k, ""), str) else fmt(r[k]) for k in header])
    return rows


def parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("--seeds: no seeds given")
    return seeds


def _run_one(config):
    return str(run_experiment(config))


def _add_config_flags(parser):
    group = parser.add_argument_group("configuration keys (override the config file)")
    for key, field in SCHEMA.items():
        default = "none" if field.default is None else field.default
        group.add_argument(f"--{key}", dest=key, default=None, metavar="V", help=f"{field.help} [default: {default}]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pawl", description="Parallel adaptive Wang-Landau experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment (or one per seed)")
    run.add_argument("config", nargs="?", help="INI configuration file")
    run.add_argument("--seeds", help="run every seed in a list such as 0-9 or 1,4,7 (one directory each)")
    run.add_argument("--jobs", type=int, default=1, help="seeds run concurrently (default: 1)")
    run.add_argument("--threads", type=int, default=None, help="numerical-library threads per run (default: library choice)")
    _add_config_flags(run)

    cmp_ = sub.add_parser("compare", help="tabulate metrics of finished runs")
    cmp_.add_argument("runs", nargs="*", help="run directories")
    cmp_.add_argument("-o", "--output", default="comparison.csv", help="output CSV")

    psi = sub.add_parser("enumerate-psi", help="exact bin masses of the g-prior target by enumeration",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    psi.add_argument("--data", default=None, help="pollution CSV (default: bundled file)")
    psi.add_argument("--low", type=float, default=377.0)
    psi.add_argument("--high", type=float, default=450.0)
    psi.add_argument("--n-bins", type=int, default=20)
    psi.add_argument("-o", "--output", default="psi.csv")

    gen = sub.add_parser("generate-data", help="write a bundled dataset from its generator",
                         formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    gen.add_argument("kind", choices=["mixture", "icefloe", "pollution"])
    gen.add_argument("-o", "--output", required=True)
    gen.add_argument("--seed", type=int, default=None, help="generator seed (default: the bundled file's)")
    return parser


def _cmd_run(args) -> int:
    overrides = {k: getattr(args, k) for k in SCHEMA if getattr(args, k, None) is not None}
    if args.seeds:
        seeds = parse_seeds(args.seeds)
        overrides["experiment.seed"] = seeds[0]
    config = build_config(args.config, overrides)
    configs = [config]
    if args.seeds:
        configs = []
        base = output_dir(config).parent if config["experiment.output_dir"] else None
        for s in seeds:
            c = dict(config, **{"experiment.seed": s})
            if base is not None:
                c["experiment.output_dir"] = str(Path(config["experiment.output_dir"]) / f"seed{s}")
            configs.append(c)

    limiter = None
    if args.threads:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(args.threads)
    try:
        if args.jobs > 1 and len(configs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for path in pool.map(_run_one, configs):
                    print(path)
        else:
            for c in configs:
                print(_run_one(c))
    finally:
        if limiter is not None:
            limiter.unregister()
    return EXIT_OK


def _cmd_psi(args) -> int:
    if args.n_bins < 1 or not args.high > args.low:
        raise ConfigError("enumerate-psi: need n-bins >= 1 and high > low")
    X, y = load_pollution_data(args.data) if args.data else (None, None)
    target = GPriorTarget(X, y)
    partition = init_partition([], args.n_bins, bin_range=(args.low, args.high))
    log_psi = enumerate_psi(target, partition)
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "lower", "upper", "log_psi"])
        for i, v in enumerate(log_psi):
            lo, hi = partition.edges(i)
            w.writerow([i, fmt(lo), fmt(hi), fmt(v)])
    print(args.output)
    return EXIT_OK


def _cmd_generate(args) -> int:
    if args.kind == "mixture":
        save_values(generate_mixture_data(1 if args.seed is None else args.seed), args.output)
    elif args.kind == "icefloe":
        save_grid_image(generate_icefloe_image(7 if args.seed is None else args.seed), args.output)
    else:
        X, y = generate_pollution_standin(1973 if args.seed is None else args.seed)
        save_pollution(X, y, args.output)
    print(args.output)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            compare_runs(args.runs, args.output)
            print(args.output)
            return EXIT_OK
        if args.command == "enumerate-psi":
            return _cmd_psi(args)
        return _cmd_generate(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunFailure, ValueError, OSError, RuntimeError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
