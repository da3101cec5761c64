#!/usr/bin/env python3
"""
Experiment Runner

Runs the configured experiments and writes deterministic CSV reports:

- efficiency-sweep: acceptance and first-order efficiency over an ell grid
- transient-trace: squared norm of chains started at the origin
- acf-compare: autocorrelation of the first coordinate at stationarity
- asymptotic: the constant K, the optimal ell and the limit curves
- ergodicity-probe: empirical behaviour on one-dimensional E(beta, gamma) targets
- single-run: one chain, one summary row
"""

import argparse
import dataclasses
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from chain_diagnostics import (
    EXPECTED_CLASSIFICATION,
    ProbeThresholds,
    acceptance_rate,
    acf,
    acf_standard_error,
    band_entries,
    band_visits,
    c5_second_moment,
    classify_probe,
    efficiency_point,
    expected_behaviour,
    k_constant,
    limit_acceptance,
    limit_speed,
    optimal_ell,
    post_burn_in,
)
from csv_report import BUILD_ID, CsvReport, write_csv
from experiment_config import EXPERIMENTS, ExperimentConfig, echo_config, parse_config
from mh_sampler import ChainTrace, KernelSpec, RunConfig, RunFailure, run_parallel
from proposals import ProposalVariant, gaussian_mean_coefficient
from sampler_errors import ConfigError, SamplerError
from target_models import ExponentialClassPotential, ProductTarget, potential_moments

logger = logging.getLogger(__name__)

SCALED_EFFICIENCY_EXPONENT = 0.2
TRANSIENT_WINDOW = 100

Outcome = Union[ChainTrace, RunFailure]


def _status(outcome: Outcome) -> str:
    if isinstance(outcome, RunFailure):
        where = f"@{outcome.step}" if outcome.step is not None else ""
        return f"failed:{outcome.error_type}{where}"
    return "ok"


def _new_report(cfg: ExperimentConfig, columns: List[str]) -> CsvReport:
    report = CsvReport(columns)
    report.add_metadata("experiment", cfg.experiment)
    report.add_metadata("config", echo_config(cfg))
    report.add_metadata("seed", cfg.seed)
    report.add_metadata("build", BUILD_ID)
    return report


def _check_path_recording(cfg: ExperimentConfig):
    if cfg.thin != 1 and cfg.coord_mode == "first":
        raise ConfigError("thin", "first-coordinate efficiency needs thin = 1")


# --------------------------------------------------------------------------
# Efficiency sweep
# --------------------------------------------------------------------------

def run_efficiency_sweep(cfg: ExperimentConfig) -> CsvReport:
    """
    Acceptance and (scaled) first-order efficiency for every (d, ell, variant).

    Variants at the same (d, ell) share the seed and hence their random
    numbers. A failed point keeps its row with a failure status.
    """
    _check_path_recording(cfg)
    columns = ["variant", "d", "ell", "h", "exponent", "acceptance", "efficiency",
               "scaled_efficiency", "status"]
    if cfg.limit_k is not None:
        columns += ["limit_acceptance", "limit_speed", "normalization"]
    report = _new_report(cfg, columns)
    for override in cfg.overrides():
        logger.warning("step-size exponent override: %s", override)
        report.add_metadata("override", override)

    points: List[Tuple] = []
    runs: List[RunConfig] = []
    for d in cfg.dimensions:
        target = cfg.target.build(d)
        for ell in cfg.ell_grid:
            for variant_cfg in cfg.variants:
                h = variant_cfg.step_size(d, ell)
                points.append((variant_cfg, d, ell, h))
                runs.append(RunConfig(
                    target=target,
                    kernel=KernelSpec.single(variant_cfg.variant, h),
                    n_steps=cfg.n_steps,
                    start=cfg.start.resolve(d),
                    seed=cfg.seed,
                    burn_in=cfg.burn_in,
                    thin=cfg.thin,
                    label=f"{variant_cfg.name} d={d} ell={ell:g}",
                ))

    logger.debug("running %d sweep points on %d worker(s)", len(runs), cfg.threads)
    outcomes = run_parallel(runs, cfg.threads)
    for (variant_cfg, d, ell, h), outcome in zip(points, outcomes):
        row = dict(variant=variant_cfg.variant.name, d=d, ell=ell, h=h,
                   exponent=variant_cfg.effective_exponent, status=_status(outcome))
        if isinstance(outcome, ChainTrace):
            try:
                point = efficiency_point(outcome, variant_cfg.name, ell, h,
                                         SCALED_EFFICIENCY_EXPONENT, cfg.coord_mode)
            except SamplerError as exc:
                row["status"] = f"failed:{type(exc).__name__}"
            else:
                row.update(acceptance=point.acceptance, efficiency=point.efficiency,
                           scaled_efficiency=point.scaled_efficiency)
        if cfg.limit_k is not None:
            row.update(limit_acceptance=float(limit_acceptance(ell, cfg.limit_k)),
                       limit_speed=float(limit_speed(ell, cfg.limit_k)))
        report.add_row(**row)

    if cfg.limit_k is not None:
        _add_normalization(report)
    return report


def _add_normalization(report: CsvReport):
    """Factor that rescales the limit speed to the best empirical efficiency of its curve."""
    groups: Dict[Tuple, List[dict]] = {}
    for row in report.rows:
        groups.setdefault((row["variant"], row["d"]), []).append(row)
    for rows in groups.values():
        empirical = [r["scaled_efficiency"] for r in rows if r.get("scaled_efficiency") is not None]
        speeds = [r["limit_speed"] for r in rows]
        factor = max(empirical) / max(speeds) if empirical and max(speeds) > 0 else None
        for r in rows:
            r["normalization"] = factor


# --------------------------------------------------------------------------
# Transient traces and autocorrelation
# --------------------------------------------------------------------------

def chi2_band(d: int) -> Tuple[float, float]:
    """Three-sigma band of |X|^2 for X ~ N(0, I_d)."""
    spread = 3.0 * math.sqrt(2.0 * d)
    return d - spread, d + spread


def transient_summary(trace: ChainTrace, d: int,
                      window: int = TRANSIENT_WINDOW) -> Tuple[float, Optional[int]]:
    """Acceptance over the first window steps and the first step whose |X|^2 is in the band."""
    head = trace.accepted[:window]
    rate = float(np.mean(head)) if head.shape[0] else float("nan")
    low, high = chi2_band(d)
    path = trace.sq_norm_path()
    inside = np.nonzero((path >= low) & (path <= high))[0]
    return rate, (int(inside[0]) if inside.shape[0] else None)


def run_transient_trace(cfg: ExperimentConfig) -> CsvReport:
    """|X_k|^2 for every strategy; steps inside the first TRANSIENT_WINDOW are flagged."""
    report = _new_report(cfg, ["strategy", "d", "step", "sq_norm", "accepted", "window"])
    jobs, runs = [], []
    for d in cfg.dimensions:
        target = cfg.target.build(d)
        for strategy in cfg.strategies:
            jobs.append((strategy.name, d))
            runs.append(RunConfig(target=target, kernel=strategy.kernel(d), n_steps=cfg.n_steps,
                                  start=cfg.start.resolve(d), seed=cfg.seed, burn_in=0, thin=1,
                                  label=strategy.name))
    for (name, d), outcome in zip(jobs, run_parallel(runs, cfg.threads)):
        if isinstance(outcome, RunFailure):
            report.add_metadata(f"failed[{name},d={d}]", outcome.message)
            continue
        rate, band_step = transient_summary(outcome, d)
        report.add_metadata(f"acceptance_first_{TRANSIENT_WINDOW}[{name},d={d}]", f"{rate:.17g}")
        report.add_metadata(f"first_step_in_band[{name},d={d}]",
                            band_step if band_step is not None else "never")
        sq_norm = outcome.sq_norm_path()
        accepted = np.concatenate(([True], outcome.accepted))
        for step in range(sq_norm.shape[0]):
            report.add_row(strategy=name, d=d, step=step, sq_norm=float(sq_norm[step]),
                           accepted=bool(accepted[step]), window=step <= TRANSIENT_WINDOW)
    return report


def run_acf_compare(cfg: ExperimentConfig) -> CsvReport:
    """Autocorrelation of the first coordinate after burn-in, with Bartlett errors."""
    report = _new_report(cfg, ["strategy", "d", "lag", "acf", "acf_se", "acceptance", "status"])
    jobs, runs = [], []
    for d in cfg.dimensions:
        target = cfg.target.build(d)
        for strategy in cfg.strategies:
            jobs.append((strategy.name, d))
            runs.append(RunConfig(target=target, kernel=strategy.kernel(d), n_steps=cfg.n_steps,
                                  start=cfg.start.resolve(d), seed=cfg.seed, burn_in=cfg.burn_in,
                                  thin=cfg.thin, label=strategy.name))
    for (name, d), outcome in zip(jobs, run_parallel(runs, cfg.threads)):
        if isinstance(outcome, RunFailure):
            report.add_row(strategy=name, d=d, status=_status(outcome))
            continue
        series = post_burn_in(outcome, outcome.first_coord)
        rho = acf(series, cfg.max_lag)
        se = acf_standard_error(rho, series.shape[0])
        rate = acceptance_rate(outcome)
        for lag in range(cfg.max_lag + 1):
            report.add_row(strategy=name, d=d, lag=lag, acf=float(rho[lag]), acf_se=float(se[lag]),
                           acceptance=rate, status="ok")
    return report


# --------------------------------------------------------------------------
# Asymptotic constants
# --------------------------------------------------------------------------

def run_asymptotic(cfg: ExperimentConfig) -> CsvReport:
    """K, its standard error and the optimal scaling for every (potential, variant), plus curve rows."""
    spec = cfg.asymptotic
    report = _new_report(cfg, ["row_type", "variant", "potential", "K", "SE", "ell_star",
                               "acceptance_at_star", "speed_at_star", "c5_mean", "c5_mean_se",
                               "c5_second_moment", "c5_second_moment_se", "ell",
                               "limit_acceptance", "limit_speed"])
    pairs = [(p, v) for p in spec.potentials for v in spec.variants]
    children = np.random.SeedSequence(cfg.seed).spawn(len(pairs)) if pairs else []
    for (potential_cfg, variant), child in zip(pairs, children):
        rng = np.random.Generator(np.random.PCG64(child))
        potential = potential_cfg.build()
        constants = k_constant(variant.name, potential, spec.n_samples, rng, spec.method, variant.params)
        row = dict(row_type="constant", variant=variant.name, potential=potential.label,
                   K=constants.k_value, SE=constants.mc_std_error)
        if constants.k_value > 0:
            scaling = optimal_ell(constants.k_value)
            row.update(ell_star=scaling.ell_star, acceptance_at_star=scaling.acceptance_at_star,
                       speed_at_star=scaling.speed_at_star)
        else:
            logger.warning("K = 0 for %s on %s; no optimal ell", variant.name, potential.label)
        if spec.c5_samples:
            c5 = c5_second_moment(variant.name, potential, spec.c5_samples, rng, 1.0,
                                  variant.params, spec.method)
            row.update(c5_mean=c5.mean, c5_mean_se=c5.mean_std_error,
                       c5_second_moment=c5.second_moment, c5_second_moment_se=c5.second_moment_std_error)
        report.add_row(**row)
        for ell in spec.ell_curve:
            report.add_row(row_type="curve", variant=variant.name, potential=potential.label, ell=ell,
                           limit_acceptance=float(limit_acceptance(ell, constants.k_value)),
                           limit_speed=float(limit_speed(ell, constants.k_value)))
    return report


# --------------------------------------------------------------------------
# Ergodicity probes
# --------------------------------------------------------------------------

def run_ergodicity_probe(cfg: ExperimentConfig) -> CsvReport:
    """
    Classify chains on E(beta, gamma) targets in dimension one.

    Unadjusted chains run in lenient scale mode and count the steps whose
    scale had a non-positive eigenvalue.
    """
    probe = cfg.probe
    thresholds = ProbeThresholds(probe.escape_radius, probe.acceptance_floor, probe.min_band_visits)
    report = _new_report(cfg, ["variant", "beta", "gamma", "h", "start_norm", "classification",
                               "expected", "expected_classification", "acceptance", "band_entries",
                               "band_visits",
                               "max_abs", "final_abs", "steps_run", "scale_failures",
                               "mean_coefficient", "status"])
    jobs, runs = [], []
    for row in probe.rows:
        variant = ProposalVariant.from_name(row.variant)
        potential = ExponentialClassPotential(row.beta, row.gamma, probe.r_pi)
        _, std = potential_moments(potential)
        for norm in row.start_norms:
            jobs.append((row, variant, norm, 2.0 * std))
            runs.append(RunConfig(
                target=ProductTarget(potential, 1),
                kernel=KernelSpec.single(variant, row.h),
                n_steps=probe.probe_steps,
                start=[norm],
                seed=cfg.seed,
                burn_in=0,
                lenient=not variant.adjusted,
                escape_radius=probe.escape_radius,
                label=f"{variant.name} beta={row.beta:g} x0={norm:g}",
            ))

    for (row, variant, norm, band), outcome in zip(jobs, run_parallel(runs, cfg.threads)):
        expected = expected_behaviour(variant, row.beta, row.gamma, row.h)
        values = dict(variant=variant.name, beta=row.beta, gamma=row.gamma, h=row.h, start_norm=norm,
                      expected=expected, expected_classification=EXPECTED_CLASSIFICATION[expected],
                      status=_status(outcome))
        if row.beta == 2:
            values["mean_coefficient"] = gaussian_mean_coefficient(variant, row.h, row.gamma)
        if isinstance(outcome, RunFailure):
            scale_failure = outcome.error_type == "ScaleNotPositive"
            values["classification"] = "scale_not_positive" if scale_failure else "error"
            values["steps_run"] = outcome.step
        else:
            path = outcome.first_coord_path()
            finite = path[np.isfinite(path)]
            values.update(
                classification=classify_probe(outcome, band, variant.adjusted, thresholds),
                acceptance=float(np.mean(outcome.accepted)) if outcome.n_steps else float("nan"),
                band_entries=band_entries(path, band),
                band_visits=band_visits(path, band),
                max_abs=float(np.max(np.abs(finite))) if finite.shape[0] else float("inf"),
                final_abs=float(abs(path[-1])),
                steps_run=outcome.n_steps,
                scale_failures=outcome.scale_failures,
            )
        report.add_row(**values)
    return report


# --------------------------------------------------------------------------
# Single run
# --------------------------------------------------------------------------

def run_single(cfg: ExperimentConfig) -> CsvReport:
    _check_path_recording(cfg)
    variant_cfg = cfg.variants[0]
    d = cfg.dimensions[0]
    h = variant_cfg.step_size(d)
    report = _new_report(cfg, ["variant", "d", "h", "n_steps", "acceptance", "efficiency",
                               "scaled_efficiency", "scale_failures", "status"])
    run = RunConfig(target=cfg.target.build(d), kernel=KernelSpec.single(variant_cfg.variant, h),
                    n_steps=cfg.n_steps, start=cfg.start.resolve(d), seed=cfg.seed,
                    burn_in=cfg.burn_in, thin=cfg.thin, label=variant_cfg.name)
    outcome = run_parallel([run], 1)[0]
    row = dict(variant=variant_cfg.variant.name, d=d, h=h, n_steps=cfg.n_steps, status=_status(outcome))
    if isinstance(outcome, ChainTrace):
        point = efficiency_point(outcome, variant_cfg.name, variant_cfg.ell or float("nan"), h,
                                 SCALED_EFFICIENCY_EXPONENT, cfg.coord_mode)
        row.update(acceptance=point.acceptance, efficiency=point.efficiency,
                   scaled_efficiency=point.scaled_efficiency, scale_failures=outcome.scale_failures)
    report.add_row(**row)
    return report


DRIVERS = {
    "efficiency-sweep": run_efficiency_sweep,
    "transient-trace": run_transient_trace,
    "acf-compare": run_acf_compare,
    "asymptotic": run_asymptotic,
    "ergodicity-probe": run_ergodicity_probe,
    "single-run": run_single,
}


def run_experiment(cfg: ExperimentConfig) -> CsvReport:
    return DRIVERS[cfg.experiment](cfg)


def main(argv=None):
    """Main entry point for the command-line interface."""
    parser = argparse.ArgumentParser(
        description='Run Langevin MCMC scaling and ergodicity experiments',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Example usage:
  python experiment_runner.py efficiency-sweep --config sweep_double_well.json
  python experiment_runner.py asymptotic --config asymptotic_constants.json --out k.csv
  python experiment_runner.py ergodicity-probe --config ergodicity_probe.json --threads 4
        """
    )

    parser.add_argument(
        'experiment',
        choices=EXPERIMENTS,
        help='Experiment to run (must match the "experiment" field of the config)'
    )

    parser.add_argument(
        '--config',
        required=True,
        help='JSON experiment configuration (see CONFIG_SCHEMA.md)'
    )

    parser.add_argument(
        '--out',
        help='Output CSV file (default: the config "output" field, else <experiment>.csv)'
    )

    parser.add_argument(
        '--seed',
        type=int,
        help='Override the config seed'
    )

    parser.add_argument(
        '--threads',
        type=int,
        help='Number of worker processes (default: the config value, 1 if absent)'
    )

    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Log debug messages'
    )

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    config_path = Path(args.config)
    if not config_path.exists():
        print(f"Error: Config file '{args.config}' not found")
        return 2

    try:
        cfg = parse_config(config_path)
        if cfg.experiment != args.experiment:
            raise ConfigError("experiment", f"config is for '{cfg.experiment}', not '{args.experiment}'")
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed", "must be a 64-bit unsigned integer")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads", "must be at least 1")
            cfg = dataclasses.replace(cfg, threads=args.threads)
        output = args.out or cfg.output or f"{cfg.experiment}.csv"

        report = run_experiment(cfg)
        write_csv(report, output)
        print(f"CSV written: {output} ({len(report.rows)} rows)")
        return 0
    except ConfigError as e:
        print(f"Error in configuration: {e}")
        return 2
    except (SamplerError, FloatingPointError) as e:
        print(f"Error running {args.experiment}: {e}")
        return 3


if __name__ == '__main__':
    exit(main())
