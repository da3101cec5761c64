#!/usr/bin/env python3
"""
Chain Diagnostics

Statistics of chain traces (acceptance rate, first-order efficiency,
autocorrelation) and the closed-form asymptotic quantities of the
d^(1/5)-scaled proposals: the leading error term C5 of the log acceptance
ratio, the constant K, the limiting acceptance a(ell) = 2 Phi(-K ell^5 / 2),
the limiting speed h(ell) = ell^2 a(ell), and its maximiser.

Also holds the ergodicity helpers for one-dimensional targets of the class
E(beta, gamma): the expected behaviour by variant and the empirical
classification of a probe run.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from mh_sampler import ChainTrace, KernelSpec, RunConfig, run_chain
from proposals import ProposalVariant
from sampler_errors import DegenerateK, EmptyTrace, NegativeEstimate
from target_models import GridInverseCdfSampler, Potential1D, ProductTarget, potential_moments

logger = logging.getLogger(__name__)

OPTIMAL_ACCEPTANCE = 0.704343

ASYMPTOTIC_LABELS = {"fMALA": "fM", "mOMA": "mO", "bOMA": "bO", "gbOMA": "gbO"}

RWM_SAMPLER_BURN_IN = 10_000
RWM_SAMPLER_THIN = 20
MIN_K_SAMPLES = 10_000


# --------------------------------------------------------------------------
# Trace statistics
# --------------------------------------------------------------------------

def acceptance_rate(trace: ChainTrace) -> float:
    """Fraction of accepted proposals after burn-in."""
    accepted = trace.accepted[trace.burn_in:]
    if accepted.shape[0] == 0:
        raise EmptyTrace(f"no steps after burn-in ({trace.n_steps} steps, burn-in {trace.burn_in})")
    return float(np.mean(accepted))


def first_order_efficiency(trace: ChainTrace, coord_mode: str = "first") -> float:
    """
    Mean squared jump per step after burn-in.

    Args:
        trace: Chain trace
        coord_mode: 'first' for E[(X1_{k+1} - X1_k)^2] (needs stride 1),
            'full_mean' for E[|X_{k+1} - X_k|^2 / d]

    Returns:
        Sample average over post-burn-in steps
    """
    if coord_mode == "first":
        jumps = np.diff(trace.first_coord_path())[trace.burn_in:] ** 2
    elif coord_mode == "full_mean":
        moved = np.where(trace.accepted, trace.proposal_sq_jump, 0.0)
        jumps = moved[trace.burn_in:] / trace.dim
    else:
        raise ValueError(f"unknown coord_mode '{coord_mode}'")
    if jumps.shape[0] == 0:
        raise EmptyTrace("efficiency needs at least one step after burn-in")
    return float(np.mean(jumps))


def post_burn_in(trace: ChainTrace, series: np.ndarray) -> np.ndarray:
    """Entries of a recorded (thinned) series whose step index is at least burn_in."""
    steps = (np.arange(series.shape[0]) + 1) * trace.recorded_every - 1
    return series[steps >= trace.burn_in]


def acf(series: Sequence[float], max_lag: int) -> np.ndarray:
    """Biased autocorrelation estimate with overall mean subtraction, lags 0..max_lag."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if n <= max_lag:
        raise EmptyTrace(f"series of length {n} is too short for max_lag {max_lag}")
    x = x - np.mean(x)
    variance = np.dot(x, x) / n
    if variance == 0:
        return np.ones(max_lag + 1)
    out = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        out[k] = np.dot(x[: n - k], x[k:]) / (n * variance)
    return out


def acf_standard_error(rho: np.ndarray, n: int) -> np.ndarray:
    """Bartlett standard errors: se_k^2 = (1 + 2 sum_{j<k} rho_j^2) / n, se_0 = 0."""
    rho = np.asarray(rho, dtype=float)
    cumulative = np.concatenate(([0.0], np.cumsum(rho[1:] ** 2)))[:-1]
    se = np.sqrt((1.0 + 2.0 * cumulative) / n)
    se[0] = 0.0
    return se


@dataclass(frozen=True)
class EfficiencyPoint:
    variant: str
    d: int
    ell: float
    h: float
    acceptance: float
    efficiency: float
    scaled_efficiency: float


def efficiency_point(trace: ChainTrace, variant: str, ell: float, h: float,
                     exponent: float = 0.2, coord_mode: str = "first") -> EfficiencyPoint:
    efficiency = first_order_efficiency(trace, coord_mode)
    return EfficiencyPoint(variant, trace.dim, ell, h, acceptance_rate(trace), efficiency,
                           trace.dim ** exponent * efficiency)


# --------------------------------------------------------------------------
# Leading term C5 and the constant K
# --------------------------------------------------------------------------

def asymptotic_label(variant: ProposalVariant) -> str:
    if variant.tag not in ASYMPTOTIC_LABELS:
        raise ValueError(f"{variant.name} has no d^(1/5) asymptotics")
    return ASYMPTOTIC_LABELS[variant.tag]


def _c5_polynomial(variant: str, g, xi, params):
    g1, g2, g3, g4, g5 = g
    xi3 = xi ** 3
    xi5 = xi ** 5
    if variant == "fM":
        return (xi5 * g5 + 5 * xi3 * g5 + 15 * xi3 * g4 * g1 + 15 * xi * g4 * g1
                + 30 * xi3 * g3 * g2 + 10 * xi * g3 * g2 + 30 * xi * g3 * g1 ** 2
                + 35 * xi * g1 * g2 ** 2) / 720.0
    common = (xi5 * g5 / 720 + xi3 * g5 / 144 + xi3 * g4 * g1 / 48 + xi * g4 * g1 / 48
              + xi * g3 * g1 ** 2 / 24)
    if variant == "mO":
        return common + 29 * xi3 * g3 * g2 / 144 - 7 * xi * g3 * g2 / 48 + xi * g1 * g2 ** 2 / 6
    if variant == "bO":
        return common + 29 * xi3 * g3 * g2 / 144 - 19 * xi * g3 * g2 / 144 + xi * g1 * g2 ** 2 / 6
    if variant == "gbO":
        a1, _, a3, a4, _ = params
        return (common + a3 * xi * g3 * g2 / 72 + a4 ** 2 * xi3 * g3 * g2 / 6
                - a4 ** 2 * xi * g3 * g2 / 6 + 5 * xi3 * g3 * g2 / 144 + xi * g3 * g2 / 48
                - a1 ** 2 * xi * g1 * g2 ** 2 / 24 + a4 ** 2 * xi * g1 * g2 ** 2 / 6
                + xi * g1 * g2 ** 2 / 24)
    raise ValueError(f"unknown asymptotic variant '{variant}'")


def c5_eval(variant: str, g: Potential1D, x, xi, ell: float,
            params: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)):
    """
    Leading coefficient C5(x, xi) of the log acceptance ratio expansion.

    Args:
        variant: 'fM', 'mO', 'bO' or 'gbO'
        g: Potential with derivatives to order 5
        x: Coordinate value(s)
        xi: Noise value(s)
        ell: Scaled step size
        params: (a1, ..., a5); gbO reads a1, a3 and a4

    Returns:
        ell^5 times a polynomial odd in xi
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    values = ell ** 5 * _c5_polynomial(variant, g.derivatives(x), xi, params)
    return float(values) if np.ndim(values) == 0 else values


def _k_squared_fm(g1, g2, g3, g4, g5):
    return (79 * g5 ** 2 / 17280 + 11 * g4 ** 2 * g1 ** 2 / 1152 + 77 * g3 ** 2 * g2 ** 2 / 2592
            + g3 ** 2 * g1 ** 4 / 576 + 49 * g1 ** 2 * g2 ** 4 / 20736 + 7 * g4 * g5 * g1 / 576
            + 19 * g3 * g5 * g2 / 864 + g3 * g5 * g1 ** 2 / 288 + 7 * g5 * g1 * g2 ** 2 / 1728
            + g3 * g4 * g1 ** 3 / 144 + 7 * g4 * g1 ** 2 * g2 ** 2 / 864
            + 7 * g3 * g1 ** 3 * g2 ** 2 / 1728 + 5 * g3 ** 2 * g1 ** 2 * g2 / 432
            + 35 * g3 * g1 * g2 ** 3 / 2592 + 29 * g3 * g4 * g1 * g2 / 864)


def _k_squared_mo(g1, g2, g3, g4, g5):
    return (79 * g5 ** 2 / 17280 + 11 * g4 ** 2 * g1 ** 2 / 1152 + 1567 * g3 ** 2 * g2 ** 2 / 3456
            + g3 ** 2 * g1 ** 4 / 576 + g1 ** 2 * g2 ** 4 / 36 + 7 * g4 * g5 * g1 / 576
            + 17 * g3 * g5 * g2 / 192 + g3 * g5 * g1 ** 2 / 288 + g5 * g1 * g2 ** 2 / 72
            + g3 * g4 * g1 ** 3 / 144 + g4 * g1 ** 2 * g2 ** 2 / 36 + g3 * g1 ** 3 * g2 ** 2 / 72
            + 11 * g3 ** 2 * g1 ** 2 * g2 / 288 + 11 * g3 * g1 * g2 ** 3 / 72
            + 73 * g3 * g4 * g1 * g2 / 576)


def _k_squared_gbo(g1, g2, g3, g4, g5, a1, a3, a4):
    a1s, a4s = a1 ** 2, a4 ** 2
    return (g1 ** 2 * g2 ** 4 * a4s ** 2 / 36 + 5 * g2 ** 2 * g3 ** 2 * a4s ** 2 / 18
            + g1 * g2 ** 3 * g3 * a4s ** 2 / 9
            - a1s * g1 ** 2 * g2 ** 4 * a4s / 72 + g1 ** 2 * g2 ** 4 * a4s / 72
            + 11 * g2 ** 2 * g3 ** 2 * a4s / 72 + a3 * g2 ** 2 * g3 ** 2 * a4s / 108
            + g1 ** 2 * g2 * g3 ** 2 * a4s / 36 - a1s * g1 * g2 ** 3 * g3 * a4s / 36
            + 5 * g1 * g2 ** 3 * g3 * a4s / 72 + a3 * g1 * g2 ** 3 * g3 * a4s / 216
            + g1 ** 3 * g2 ** 2 * g3 * a4s / 72 + g1 ** 2 * g2 ** 2 * g4 * a4s / 36
            + 7 * g1 * g2 * g3 * g4 * a4s / 72 + g1 * g2 ** 2 * g5 * a4s / 72
            + 5 * g2 * g3 * g5 * a4s / 72
            + a1s ** 2 * g1 ** 2 * g2 ** 4 / 576 - a1s * g1 ** 2 * g2 ** 4 / 288
            + g1 ** 2 * g2 ** 4 / 576 + g1 ** 4 * g3 ** 2 / 576
            + a3 ** 2 * g2 ** 2 * g3 ** 2 / 5184 + a3 * g2 ** 2 * g3 ** 2 / 288
            + 79 * g2 ** 2 * g3 ** 2 / 3456 + g1 ** 2 * g2 * g3 ** 2 / 96
            + a3 * g1 ** 2 * g2 * g3 ** 2 / 864 + 11 * g1 ** 2 * g4 ** 2 / 1152
            + 79 * g5 ** 2 / 17280
            - a1s * g1 * g2 ** 3 * g3 / 96 + g1 * g2 ** 3 * g3 / 96
            - a1s * a3 * g1 * g2 ** 3 * g3 / 864 + a3 * g1 * g2 ** 3 * g3 / 864
            - a1s * g1 ** 3 * g2 ** 2 * g3 / 288 + g1 ** 3 * g2 ** 2 * g3 / 288
            - a1s * g1 ** 2 * g2 ** 2 * g4 / 144 + g1 ** 2 * g2 ** 2 * g4 / 144
            + g1 ** 3 * g3 * g4 / 144 + 17 * g1 * g2 * g3 * g4 / 576
            + a3 * g1 * g2 * g3 * g4 / 432
            - a1s * g1 * g2 ** 2 * g5 / 288 + g1 * g2 ** 2 * g5 / 288
            + g1 ** 2 * g3 * g5 / 288 + 11 * g2 * g3 * g5 / 576 + a3 * g2 * g3 * g5 / 864
            + 7 * g1 * g4 * g5 / 576)


def k_integrand(variant: str, g: Potential1D, x,
                params: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)):
    """Integrand whose expectation under the one-dimensional marginal is K^2."""
    derivs = g.derivatives(np.asarray(x, dtype=float))
    if variant == "fM":
        return _k_squared_fm(*derivs)
    if variant == "mO":
        return _k_squared_mo(*derivs)
    if variant == "bO":
        return _k_squared_gbo(*derivs, 1.0, 1.0, 1.0)
    if variant == "gbO":
        a1, _, a3, a4, _ = params
        return _k_squared_gbo(*derivs, a1, a3, a4)
    raise ValueError(f"unknown asymptotic variant '{variant}'")


def marginal_sample(g: Potential1D, n: int, rng: np.random.Generator, method: str = "auto") -> np.ndarray:
    """
    Draw n points from the density proportional to exp(g).

    method 'auto' picks 'exact' when the potential has an exact sampler and
    'rwm' otherwise; 'grid' inverts the CDF on a fine grid.
    """
    if method == "auto":
        method = "exact" if g.can_sample_exactly else "rwm"
    if method == "exact":
        return np.asarray(g.exact_sample(rng, n), dtype=float)
    if method == "grid":
        return GridInverseCdfSampler(g).sample(rng, n)
    if method == "rwm":
        _, std = potential_moments(g)
        cfg = RunConfig(
            target=ProductTarget(g, 1),
            kernel=KernelSpec.single(ProposalVariant("RWM"), (2.4 * std) ** 2),
            n_steps=RWM_SAMPLER_BURN_IN + n * RWM_SAMPLER_THIN,
            burn_in=RWM_SAMPLER_BURN_IN,
            thin=RWM_SAMPLER_THIN,
            seed=int(rng.integers(2 ** 63)),
        )
        trace = run_chain(cfg)
        return post_burn_in(trace, trace.first_coord)[:n]
    raise ValueError(f"unknown sampling method '{method}'")


@dataclass(frozen=True)
class AsymptoticConstants:
    variant: str
    k_value: float
    mc_std_error: float
    n_samples: int
    integrand_mean: float
    integrand_std_error: float
    method: str = "auto"


def _mean_and_se(values: np.ndarray) -> Tuple[float, float]:
    n = values.shape[0]
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, se


def k_constant(variant: str, g: Potential1D, n_samples: int, rng: np.random.Generator,
               method: str = "auto", params: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)
               ) -> AsymptoticConstants:
    """
    Monte-Carlo estimate of K = sqrt(E[integrand(X)]), X from the marginal of g.

    Raises:
        ValueError: if n_samples is below MIN_K_SAMPLES
        NegativeEstimate: if the average is below zero by more than 3 standard errors
    """
    if n_samples < MIN_K_SAMPLES:
        raise ValueError(f"K needs at least {MIN_K_SAMPLES} samples, got {n_samples}")
    samples = marginal_sample(g, n_samples, rng, method)
    mean, se = _mean_and_se(np.asarray(k_integrand(variant, g, samples, params), dtype=float))
    if mean < -3.0 * se:
        raise NegativeEstimate(variant, mean, se)
    k_value = math.sqrt(max(mean, 0.0))
    k_se = se / (2.0 * k_value) if k_value > 0 else math.inf
    logger.info("K^%s for %s = %.6g +- %.2g, read as E[C5^2] = ell^10 K^2 (%d samples, %s)",
                variant, g.label, k_value, k_se, n_samples, method)
    return AsymptoticConstants(variant, k_value, k_se, n_samples, mean, se, method)


@dataclass(frozen=True)
class C5Moments:
    mean: float
    mean_std_error: float
    second_moment: float
    second_moment_std_error: float


def c5_second_moment(variant: str, g: Potential1D, n: int, rng: np.random.Generator, ell: float = 1.0,
                     params: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0),
                     method: str = "auto") -> C5Moments:
    """Monte-Carlo mean and second moment of C5(X, xi), X from the marginal, xi ~ N(0, 1)."""
    x = marginal_sample(g, n, rng, method)
    xi = rng.standard_normal(x.shape[0])
    values = np.asarray(c5_eval(variant, g, x, xi, ell, params), dtype=float)
    mean, mean_se = _mean_and_se(values)
    second, second_se = _mean_and_se(values ** 2)
    return C5Moments(mean, mean_se, second, second_se)


# --------------------------------------------------------------------------
# Limit curves
# --------------------------------------------------------------------------

def normal_cdf(t):
    """Standard normal CDF with the (2 pi)^(-1/2) normalisation."""
    return ndtr(t)


def limit_acceptance(ell, k: float):
    """a(ell) = 2 Phi(-k ell^5 / 2)"""
    return 2.0 * ndtr(-k * np.asarray(ell, dtype=float) ** 5 / 2.0)


def limit_speed(ell, k: float):
    """h(ell) = 2 ell^2 Phi(-k ell^5 / 2); equals ell^2 when k = 0."""
    if k == 0:
        logger.warning("K = 0: the limiting speed ell^2 has no maximiser")
    ell = np.asarray(ell, dtype=float)
    return ell ** 2 * limit_acceptance(ell, k)


@dataclass(frozen=True)
class OptimalScaling:
    ell_star: float
    acceptance_at_star: float
    speed_at_star: float


def optimal_ell(k: float) -> OptimalScaling:
    """
    Maximise the limiting speed by golden-section search on an expanded bracket.

    Raises:
        DegenerateK: if k = 0
    """
    if k < 0:
        raise ValueError(f"K must be non-negative, got {k}")
    if k == 0:
        raise DegenerateK("K = 0: the limiting speed grows without bound")

    def speed(ell):
        return float(limit_speed(ell, k))

    middle = 1.0
    while speed(middle / 2.0) >= speed(middle):
        middle /= 2.0
    low, high = middle / 2.0, 2.0 * middle
    while speed(high) >= speed(middle):
        low, middle, high = middle, high, 2.0 * high

    result = minimize_scalar(lambda ell: -speed(ell), bracket=(low, middle, high),
                             method="golden", options={"xtol": 1e-12})
    ell_star = float(result.x)
    acceptance = float(limit_acceptance(ell_star, k))
    if abs(acceptance - OPTIMAL_ACCEPTANCE) > 1e-4:
        logger.warning("acceptance at the optimum %.6f differs from %.6f", acceptance, OPTIMAL_ACCEPTANCE)
    return OptimalScaling(ell_star, acceptance, speed(ell_star))


# --------------------------------------------------------------------------
# Ergodicity of E(beta, gamma) targets
# --------------------------------------------------------------------------

GEOMETRIC = "geometric"
NOT_GEOMETRIC = "not-geometric"
ERGODIC = "ergodic"
TRANSIENT = "transient"
UNKNOWN = "unknown"

EXPECTED_CLASSIFICATION = {
    GEOMETRIC: "stable",
    ERGODIC: "stable",
    TRANSIENT: "diverged",
    NOT_GEOMETRIC: "stuck",
    UNKNOWN: "",
}


def _beta_two_cell(variant: ProposalVariant, hg: float) -> str:
    if variant.tag == "bOMA":
        return GEOMETRIC
    if variant.adjusted:
        if variant.tag == "fMALA":
            s = hg * (1.0 + hg / 6.0)
            return GEOMETRIC if s < 2 else NOT_GEOMETRIC if s > 2 else UNKNOWN
        return GEOMETRIC if hg < 1.22 else NOT_GEOMETRIC if hg > 1.23 else UNKNOWN
    if variant.tag == "fMALA":
        s = hg * (1.0 + hg / 6.0)
    else:
        s = 1.0 + 2.0 * hg * hg / 3.0 - math.exp(-hg)
    return GEOMETRIC if 0 < s < 2 else TRANSIENT if s > 2 else UNKNOWN


def expected_behaviour(variant: ProposalVariant, beta: float, gamma: float, h: float) -> str:
    """
    Known ergodic behaviour on the class E(beta, gamma) in dimension one.

    Returns one of 'geometric', 'not-geometric', 'ergodic', 'transient' or
    'unknown' (variant not covered, or a threshold boundary).
    """
    if variant.tag not in ("fMALA", "mOMA", "bOMA"):
        return UNKNOWN
    if beta < 1:
        if not variant.adjusted:
            return ERGODIC
        return NOT_GEOMETRIC if variant.tag != "bOMA" else UNKNOWN
    if beta < 2:
        return GEOMETRIC
    if beta == 2:
        return _beta_two_cell(variant, h * gamma)
    if variant.tag == "bOMA":
        return GEOMETRIC
    return NOT_GEOMETRIC if variant.adjusted else TRANSIENT


@dataclass(frozen=True)
class ProbeThresholds:
    escape_radius: float = 1e6
    acceptance_floor: float = 1e-3
    min_band_visits: int = 50
    min_band_entries: int = 2


def band_entries(path: np.ndarray, half_width: float) -> int:
    """Number of moves from outside [-half_width, half_width] into it."""
    inside = np.abs(path) <= half_width
    return int(np.sum(~inside[:-1] & inside[1:]))


def band_visits(path: np.ndarray, half_width: float) -> int:
    """Number of states in the second half of the path that lie in [-half_width, half_width]."""
    tail = path[path.shape[0] // 2:]
    return int(np.sum(np.abs(tail) <= half_width))


def classify_probe(trace: ChainTrace, band_half_width: float, adjusted: bool,
                   thresholds: Optional[ProbeThresholds] = None) -> str:
    """
    Empirical behaviour of a one-dimensional probe chain.

    diverged: the chain left the escape radius or became non-finite.
    stuck: an adjusted chain accepted less than the floor and never entered the band.
    stable: the path arrives in the band at least min_band_entries times (a start
    inside counts as one arrival) and its second half visits the band at least
    min_band_visits times.
    Anything else is 'undetermined'.
    """
    thresholds = thresholds or ProbeThresholds()
    if trace.stopped_at is not None:
        return "diverged"
    path = trace.first_coord_path()
    if not np.all(np.isfinite(path)) or np.max(np.abs(path)) > thresholds.escape_radius:
        return "diverged"
    rate = float(np.mean(trace.accepted)) if trace.n_steps else 0.0
    if adjusted and rate < thresholds.acceptance_floor and not np.any(np.abs(path) <= band_half_width):
        return "stuck"
    arrivals = band_entries(path, band_half_width) + int(abs(path[0]) <= band_half_width)
    visits = band_visits(path, band_half_width)
    if arrivals >= thresholds.min_band_entries and visits >= thresholds.min_band_visits:
        return "stable"
    return "undetermined"
