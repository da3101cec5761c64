#!/usr/bin/env python3
"""
Langevin Proposals

Gaussian proposals y = mu(x, h) + S(x, h) xi, xi ~ N(0, I), for the random
walk (RWM), the Langevin baseline (MALA), the fast higher-order Langevin
proposal (fMALA) and the Ozaki-type proposals (mOMA, bOMA, gbOMA). Each has an
unadjusted twin (ULA, fULA, mUOA, bUOA, gbUOA) that always accepts.

The scale factor S is kept as a structured representation of the Jacobian so
that product targets never materialise a matrix and fMALA never
eigendecomposes.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from matrix_functions import (
    JacobianRep,
    ScalarRep,
    SpectralFunctional,
    assumption1_check,
    sqrt_of,
    t1_functional,
    t2_functional,
    t3_functional,
    variance_functional,
    variance_map_spectrum,
)
from sampler_errors import NonPositiveSpectrum, ScaleNotPositive
from target_models import TargetModel

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

VARIANT_TAGS = ("RWM", "MALA", "fMALA", "mOMA", "bOMA", "gbOMA")
UNADJUSTED_NAMES = {
    "RWM": "RW",
    "MALA": "ULA",
    "fMALA": "fULA",
    "mOMA": "mUOA",
    "bOMA": "bUOA",
    "gbOMA": "gbUOA",
}
_TAG_BY_UNADJUSTED = {name: tag for tag, name in UNADJUSTED_NAMES.items()}

# Critical exponent of the step size: h = ell^2 d^(-gamma0)
STEP_EXPONENTS = {
    "RWM": 1.0,
    "MALA": 1.0 / 3.0,
    "fMALA": 0.2,
    "mOMA": 0.2,
    "bOMA": 0.2,
    "gbOMA": 0.2,
}

UNIT_PARAMS = (1.0, 1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ProposalVariant:
    """
    A proposal family plus the adjusted / unadjusted switch.

    params holds (a1, ..., a5) and is only read for gbOMA.
    """

    tag: str
    adjusted: bool = True
    params: Tuple[float, ...] = UNIT_PARAMS

    def __post_init__(self):
        if self.tag not in VARIANT_TAGS:
            raise ValueError(f"unknown proposal variant '{self.tag}'")
        params = tuple(float(a) for a in self.params)
        if len(params) != 5:
            raise ValueError(f"gbOMA needs 5 parameters, got {len(params)}")
        object.__setattr__(self, "params", params)
        if self.tag == "gbOMA":
            if any(a <= 0 for a in params):
                raise ValueError(f"gbOMA parameters must be positive, got {params}")
            report = assumption1_check(params[3], params[4])
            if not report.holds:
                raise ValueError(
                    f"gbOMA parameters a4={params[3]:g}, a5={params[4]:g} violate the "
                    f"positivity condition of the variance map")

    @classmethod
    def from_name(cls, name: str, params: Iterable[float] = UNIT_PARAMS) -> "ProposalVariant":
        """Build a variant from 'fMALA', 'fULA', 'bUOA', 'gbOMA', ..."""
        if name in VARIANT_TAGS:
            return cls(name, True, tuple(params))
        if name in _TAG_BY_UNADJUSTED:
            return cls(_TAG_BY_UNADJUSTED[name], False, tuple(params))
        raise ValueError(f"unknown proposal variant '{name}'")

    @property
    def name(self) -> str:
        base = self.tag if self.adjusted else UNADJUSTED_NAMES[self.tag]
        if self.tag == "gbOMA" and self.params != UNIT_PARAMS:
            base += "(" + ",".join(f"{a:g}" for a in self.params) + ")"
        return base

    @property
    def step_exponent(self) -> float:
        return STEP_EXPONENTS[self.tag]

    @property
    def uses_jacobian(self) -> bool:
        return self.tag not in ("RWM", "MALA")


@dataclass(frozen=True, eq=False)
class ProposalMoments:
    """
    Mean and scale factor of a Gaussian proposal.

    positive is False only for moments built in lenient mode whose scale has
    a non-positive eigenvalue; log_det_scale is NaN then.
    """

    mean: np.ndarray
    scale: JacobianRep
    log_det_scale: float
    positive: bool = True

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _signed_sqrt(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.sqrt(np.abs(values))


def _finish(variant: ProposalVariant, mean: np.ndarray, scale: JacobianRep,
            lenient: bool) -> ProposalMoments:
    try:
        log_det_scale = scale.log_det()
    except NonPositiveSpectrum as exc:
        if lenient:
            return ProposalMoments(mean, scale, float("nan"), positive=False)
        raise ScaleNotPositive(variant.name, scale.min_eigenvalue(), str(exc)) from exc
    return ProposalMoments(mean, scale, log_det_scale)


def _ozaki_scale(variant: ProposalVariant, jac: JacobianRep, variance: SpectralFunctional,
                 lenient: bool) -> JacobianRep:
    try:
        return jac.apply(sqrt_of(variance))
    except NonPositiveSpectrum as exc:
        if lenient:
            return jac.apply(SpectralFunctional(f"signed_sqrt({variance.label})", _signed_sqrt,
                                                inner=variance))
        raise ScaleNotPositive(variant.name, exc.image, str(exc)) from exc


def moments(variant: ProposalVariant, x: np.ndarray, h: float, target: TargetModel,
            lenient: bool = False) -> ProposalMoments:
    """
    Proposal moments (mu(x, h), S(x, h)) of a variant.

    Args:
        variant: Proposal variant
        x: Current state
        h: Step size
        target: Target model supplying drift, Jacobian and contraction
        lenient: Keep a scale with non-positive eigenvalues instead of raising

    Returns:
        ProposalMoments

    Raises:
        ScaleNotPositive: if the scale factor is not positive definite
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    sqrt_h = math.sqrt(h)

    if variant.tag == "RWM":
        return ProposalMoments(x.copy(), ScalarRep(sqrt_h, d), d * math.log(sqrt_h))

    f = target.drift(x)
    if variant.tag == "MALA":
        return ProposalMoments(x + 0.5 * h * f, ScalarRep(sqrt_h, d), d * math.log(sqrt_h))

    jac = target.jacobian(x)
    contraction = target.hessian_contraction(x)
    jf = jac.matvec(f)

    if variant.tag == "fMALA":
        mean = x + 0.5 * h * f - (h * h / 24.0) * (jf + contraction)
        scale = jac.affine(sqrt_h, h * sqrt_h / 12.0)
        return _finish(variant, mean, scale, lenient)

    if variant.tag == "mOMA":
        t1 = jac.apply(t1_functional(h, 1.0))
        mean = x + t1.matvec(f) - (h * h / 6.0) * jf - (h * h / 24.0) * contraction
        scale = _ozaki_scale(variant, jac, variance_functional("mO", h), lenient)
        return _finish(variant, mean, scale, lenient)

    a1, a2, a3, a4, a5 = variant.params
    t1 = jac.apply(t1_functional(h, a1))
    t2 = jac.apply(t2_functional(h, a2))
    t3 = jac.apply(t3_functional(h, a3))
    mean = (x + t1.matvec(f) - t3.matvec(contraction) / 3.0
            + (0.5 * a1 + 1.0 / 6.0) * t2.matvec(f))
    if variant.tag == "bOMA":
        variance = variance_functional("bO", h)
    else:
        variance = variance_functional("gbO", h, a4, a5)
    scale = _ozaki_scale(variant, jac, variance, lenient)
    return _finish(variant, mean, scale, lenient)


def sample(m: ProposalMoments, noise: np.ndarray) -> np.ndarray:
    """y = mu + S xi"""
    return m.mean + m.scale.matvec(np.asarray(noise, dtype=float))


def log_q(m: ProposalMoments, y: np.ndarray) -> float:
    """Log density of N(mu, S S^T) at y, written against the factor S."""
    if not m.positive:
        raise ScaleNotPositive("proposal", m.scale.min_eigenvalue(), "log density needs a positive scale")
    residual = m.scale.solve(np.asarray(y, dtype=float) - m.mean)
    return float(-0.5 * m.dim * LOG_2PI - m.log_det_scale - 0.5 * np.dot(residual, residual))


def scale_spectrum(variant: ProposalVariant, x: np.ndarray, h: float, target: TargetModel) -> np.ndarray:
    """
    Signed spectrum of the scale factor at x.

    Ozaki variants report sign(v) sqrt|v| for each eigenvalue v of the
    variance map, so a negative entry marks an ill-posed proposal.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if variant.tag in ("RWM", "MALA"):
        return np.full(d, math.sqrt(h))
    lam = target.jacobian(x).eigenvalues()
    if variant.tag == "fMALA":
        return math.sqrt(h) + (h ** 1.5 / 12.0) * lam
    if variant.tag == "mOMA":
        values = variance_map_spectrum("mO", lam, h)
    elif variant.tag == "bOMA":
        values = variance_map_spectrum("bO", lam, h)
    else:
        values = variance_map_spectrum("gbO", lam, h, variant.params[3], variant.params[4])
    return _signed_sqrt(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class ProbeReport:
    min_value: float
    argmin: np.ndarray

    @property
    def well_posed(self) -> bool:
        return self.min_value > 0


def well_posedness_probe(variant: ProposalVariant, target: TargetModel, x_grid, h: float) -> ProbeReport:
    """
    Smallest signed scale eigenvalue over a grid of states.

    Scalar grid entries are broadcast to the constant vector of the target's
    dimension.
    """
    best_value = math.inf
    best_point = None
    for point in x_grid:
        x = np.asarray(point, dtype=float)
        if x.ndim == 0:
            x = np.full(target.dim, float(x))
        value = float(np.min(scale_spectrum(variant, x, h, target)))
        if value < best_value:
            best_value, best_point = value, x
    if best_point is None:
        raise ValueError("probe grid is empty")
    if best_value <= 0:
        logger.info("%s is ill-posed at h=%g: scale eigenvalue %g", variant.name, h, best_value)
    return ProbeReport(best_value, best_point)


def gaussian_mean_coefficient(variant: ProposalVariant, h: float, gamma: float) -> float:
    """
    Coefficient c with mu(x, h) = c x on the product target g(t) = -gamma t^2.

    |c| < 1 is the condition for the unadjusted chain to contract.
    """
    hg = h * gamma
    if variant.tag == "RWM":
        return 1.0
    if variant.tag == "MALA":
        return 1.0 - hg
    if variant.tag == "fMALA":
        return 1.0 - hg * (1.0 + hg / 6.0)
    if variant.tag == "mOMA":
        return math.exp(-hg) - 2.0 * hg * hg / 3.0
    a1, a2 = variant.params[0], variant.params[1]
    return (1.0 + math.expm1(-a1 * hg) / a1
            + (0.5 * a1 + 1.0 / 6.0) * math.expm1(-a2 * hg * hg) / a2)
