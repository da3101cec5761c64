#!/usr/bin/env python3
"""
Target Models

Target densities pi on R^d together with the derivative information the
Langevin proposals consume: the drift f = grad log pi (Sigma = I), its
Jacobian Df as a structured representation, and the Hessian contraction
{Sigma : D^2 f} whose i-th entry is the Laplacian of f_i.

Three families are provided:

- product targets pi(x) ~ prod exp(g(x_i)) for a one-dimensional potential g
  (Gaussian, double well, exponential class E(beta, gamma));
- the non-product AR(1)-Cauchy target with a tridiagonal Jacobian.

All evaluations are pure; target objects are immutable and picklable so they
can be shipped to worker processes.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from matrix_functions import DiagonalRep, JacobianRep, SymTridiagonalRep

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 5
SMOOTHING_RADIUS = 1e-3


def _falling_factorial(beta: float, k: int) -> float:
    result = 1.0
    for j in range(k):
        result *= beta - j
    return result


def _like(values, t):
    return float(values) if np.ndim(t) == 0 else values


class Potential1D(ABC):
    """One-dimensional log-density g (up to a constant) with derivatives to order 5."""

    label = "potential"

    @abstractmethod
    def eval_deriv(self, order: int, t):
        """Return g^(order)(t) for order in 0..5; t may be a scalar or an array."""

    def derivatives(self, t, max_order: int = MAX_DERIVATIVE_ORDER) -> Tuple:
        """(g'(t), ..., g^(max_order)(t))"""
        return tuple(self.eval_deriv(k, t) for k in range(1, max_order + 1))

    @property
    def can_sample_exactly(self) -> bool:
        return False

    def exact_sample(self, rng: np.random.Generator, size):
        raise NotImplementedError(f"no exact sampler for {self.label}")

    def _check_order(self, order: int):
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(f"derivative order must be in 0..{MAX_DERIVATIVE_ORDER}, got {order}")


class GaussianPotential(Potential1D):
    """g(t) = -gamma t^2; gamma = 1/2 gives the standard normal."""

    def __init__(self, gamma: float = 0.5):
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)
        self.label = "gaussian" if self.gamma == 0.5 else f"gaussian(gamma={self.gamma:g})"

    def eval_deriv(self, order, t):
        self._check_order(order)
        t = np.asarray(t, dtype=float)
        if order == 0:
            values = -self.gamma * t * t
        elif order == 1:
            values = -2.0 * self.gamma * t
        elif order == 2:
            values = np.full_like(t, -2.0 * self.gamma)
        else:
            values = np.zeros_like(t)
        return _like(values, t)

    @property
    def std(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.gamma)

    @property
    def can_sample_exactly(self) -> bool:
        return True

    def exact_sample(self, rng, size):
        return self.std * rng.standard_normal(size)


class DoubleWellPotential(Potential1D):
    """g(t) = -t^4/4 + t^2/2"""

    label = "double-well"

    def eval_deriv(self, order, t):
        self._check_order(order)
        t = np.asarray(t, dtype=float)
        if order == 0:
            values = -0.25 * t ** 4 + 0.5 * t * t
        elif order == 1:
            values = -t ** 3 + t
        elif order == 2:
            values = -3.0 * t * t + 1.0
        elif order == 3:
            values = -6.0 * t
        elif order == 4:
            values = np.full_like(t, -6.0)
        else:
            values = np.zeros_like(t)
        return _like(values, t)


class ExponentialClassPotential(Potential1D):
    """
    Member of the class E(beta, gamma): g(t) = -gamma |t|^beta for |t| >= r_pi.

    Inside the radius the potential is an even polynomial
    a0 + a2 t^2 + a4 t^4 + a6 t^6 matching g, g', g'' and g''' of the tail at
    |t| = r_pi, so g is C^3. An even integer beta with r_pi = 0 is the plain
    polynomial -gamma t^beta. Any other beta with r_pi = 0 is smoothed at
    SMOOTHING_RADIUS since |t|^beta is not C^3 at the origin.
    """

    def __init__(self, beta: float, gamma: float, r_pi: float = 0.0):
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        if r_pi < 0:
            raise ValueError(f"r_pi must be non-negative, got {r_pi}")
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.label = f"E(beta={self.beta:g},gamma={self.gamma:g})"

        even_integer = self.beta.is_integer() and int(self.beta) % 2 == 0
        if r_pi == 0 and not even_integer:
            logger.info("beta=%g is not an even integer; smoothing the origin at radius %g",
                        self.beta, SMOOTHING_RADIUS)
            r_pi = SMOOTHING_RADIUS
        self.r_pi = float(r_pi)
        self.polynomial = None
        if self.r_pi == 0:
            coeffs = np.zeros(int(self.beta) + 1)
            coeffs[-1] = -self.gamma
            self.polynomial = Polynomial(coeffs)
            self.bridge = None
        else:
            self.bridge = self._fit_bridge()

    def _tail(self, order, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (-self.gamma * _falling_factorial(self.beta, order)
                    * np.sign(t) ** order * np.abs(t) ** (self.beta - order))

    def _fit_bridge(self) -> Polynomial:
        r = self.r_pi
        monomials = [Polynomial.basis(p) for p in (0, 2, 4, 6)]
        system = np.array([[m.deriv(k)(r) if k else m(r) for m in monomials] for k in range(4)])
        rhs = np.array([self._tail(k, r) for k in range(4)])
        a0, a2, a4, a6 = np.linalg.solve(system, rhs)
        return Polynomial([a0, 0.0, a2, 0.0, a4, 0.0, a6])

    def eval_deriv(self, order, t):
        self._check_order(order)
        t = np.asarray(t, dtype=float)
        if self.polynomial is not None:
            poly = self.polynomial.deriv(order) if order else self.polynomial
            return _like(poly(t), t)
        inner = self.bridge.deriv(order) if order else self.bridge
        values = np.where(np.abs(t) >= self.r_pi, self._tail(order, t), inner(t))
        return _like(values, t)


@dataclass(frozen=True)
class ExponentialClassSpec:
    beta: float
    gamma: float
    r_pi: float = 0.0


@dataclass(frozen=True)
class Ar1Link:
    """Link alpha of the AR(1) mean: 'half' (x/2) or 'sine' (sin x)."""

    name: str

    def __post_init__(self):
        if self.name not in ("half", "sine"):
            raise ValueError(f"unknown AR(1) link '{self.name}'")

    def derivatives(self, x: np.ndarray):
        """(alpha, alpha', alpha'', alpha''') evaluated at x"""
        if self.name == "half":
            zeros = np.zeros_like(x)
            return 0.5 * x, np.full_like(x, 0.5), zeros, zeros
        s, c = np.sin(x), np.cos(x)
        return s, c, -s, -c


@dataclass(frozen=True)
class Ar1CauchySpec:
    dim: int
    link: str = "half"


class TargetModel(ABC):
    """A target density on R^d with Sigma = I."""

    sigma = "identity"
    label = "target"

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def log_density_unnorm(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def drift(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def jacobian(self, x: np.ndarray) -> JacobianRep:
        ...

    @abstractmethod
    def hessian_contraction(self, x: np.ndarray) -> np.ndarray:
        ...

    @property
    def can_sample_exactly(self) -> bool:
        return False

    def exact_sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError(f"no exact sampler for {self.label}")


class ProductTarget(TargetModel):
    """pi(x) proportional to prod_i exp(g(x_i))"""

    def __init__(self, potential: Potential1D, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be at least 1, got {dim}")
        self.potential = potential
        self._dim = int(dim)
        self.label = f"product[{potential.label}]"

    @property
    def dim(self) -> int:
        return self._dim

    def log_density_unnorm(self, x):
        return float(np.sum(self.potential.eval_deriv(0, np.asarray(x, dtype=float))))

    def drift(self, x):
        return np.asarray(self.potential.eval_deriv(1, np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x):
        return DiagonalRep(self.potential.eval_deriv(2, np.asarray(x, dtype=float)))

    def hessian_contraction(self, x):
        return np.asarray(self.potential.eval_deriv(3, np.asarray(x, dtype=float)), dtype=float)

    @property
    def can_sample_exactly(self) -> bool:
        return self.potential.can_sample_exactly

    def exact_sample(self, rng):
        return np.asarray(self.potential.exact_sample(rng, self._dim), dtype=float)


class Ar1CauchyTarget(TargetModel):
    """
    log pi(x) = -sum_i log(1 + (x_i - alpha(x_{i-1}))^2) with x_0 = 0.

    Every evaluation is O(d); the Jacobian is symmetric tridiagonal.
    """

    def __init__(self, spec: Ar1CauchySpec):
        if spec.dim < 2:
            raise ValueError(f"AR(1) target needs dimension >= 2, got {spec.dim}")
        self._dim = int(spec.dim)
        self.link = Ar1Link(spec.link)
        self.label = f"ar1-{spec.link}"

    @property
    def dim(self) -> int:
        return self._dim

    def _residuals(self, x):
        x = np.asarray(x, dtype=float)
        prev = np.concatenate(([0.0], x[:-1]))
        alpha_prev, d1_prev, d2_prev, _ = self.link.derivatives(prev)
        return x, x - alpha_prev, d1_prev, d2_prev

    @staticmethod
    def _psi(u):
        q = 1.0 + u * u
        return 2.0 * u / q, 2.0 * (1.0 - u * u) / (q * q), 4.0 * u * (u * u - 3.0) / q ** 3

    def log_density_unnorm(self, x):
        _, u, _, _ = self._residuals(x)
        return float(-np.sum(np.log1p(u * u)))

    def drift(self, x):
        x, u, _, _ = self._residuals(x)
        psi, _, _ = self._psi(u)
        _, d1, _, _ = self.link.derivatives(x)
        out = -psi
        out[:-1] += d1[:-1] * psi[1:]
        return out

    def jacobian(self, x):
        x, u, _, _ = self._residuals(x)
        psi, dpsi, _ = self._psi(u)
        _, d1, d2, _ = self.link.derivatives(x)
        diag = -dpsi
        diag[:-1] += d2[:-1] * psi[1:] - d1[:-1] ** 2 * dpsi[1:]
        return SymTridiagonalRep(diag, d1[:-1] * dpsi[1:])

    def hessian_contraction(self, x):
        x, u, d1_prev, d2_prev = self._residuals(x)
        psi, dpsi, ddpsi = self._psi(u)
        _, d1, d2, d3 = self.link.derivatives(x)
        out = -ddpsi
        out[1:] += -ddpsi[1:] * d1_prev[1:] ** 2 + dpsi[1:] * d2_prev[1:]
        nxt = slice(None, -1)
        out[nxt] += (d3[nxt] * psi[1:] - 3.0 * d1[nxt] * d2[nxt] * dpsi[1:]
                     + d1[nxt] ** 3 * ddpsi[1:] + d1[nxt] * ddpsi[1:])
        return out


def make_product_target(g: Potential1D, d: int) -> ProductTarget:
    return ProductTarget(g, d)


def make_exponential_class_target(spec: ExponentialClassSpec, d: int = 1) -> ProductTarget:
    return ProductTarget(ExponentialClassPotential(spec.beta, spec.gamma, spec.r_pi), d)


def make_ar1_target(spec: Ar1CauchySpec) -> Ar1CauchyTarget:
    return Ar1CauchyTarget(spec)


@dataclass(frozen=True)
class FdReport:
    drift_error: float
    jacobian_error: float
    contraction_error: float

    def max_error(self) -> float:
        return max(self.drift_error, self.jacobian_error, self.contraction_error)


def _relative_error(approx, exact) -> float:
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return float(np.max(np.abs(approx - exact) / np.maximum(np.abs(exact), 1.0)))


def fd_consistency_check(target: TargetModel, x: np.ndarray, step: float = 1e-5) -> FdReport:
    """
    Compare analytic derivatives against central finite differences.

    Args:
        target: Target to check
        x: Evaluation point
        step: Finite-difference step

    Returns:
        FdReport with the maximal relative error of the drift against the log
        density, of the Jacobian against the drift, and of the contraction
        against derivatives of the Jacobian
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    fd_drift = np.empty(d)
    fd_jac = np.empty((d, d))
    fd_contraction = np.zeros(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        fd_drift[j] = (target.log_density_unnorm(x + e) - target.log_density_unnorm(x - e)) / (2 * step)
        fd_jac[:, j] = (target.drift(x + e) - target.drift(x - e)) / (2 * step)
        fd_contraction += (target.jacobian(x + e).to_dense()[:, j]
                           - target.jacobian(x - e).to_dense()[:, j]) / (2 * step)
    return FdReport(
        drift_error=_relative_error(fd_drift, target.drift(x)),
        jacobian_error=_relative_error(fd_jac, target.jacobian(x).to_dense()),
        contraction_error=_relative_error(fd_contraction, target.hessian_contraction(x)),
    )


def _support_half_width(potential: Potential1D, drop: float = 40.0) -> float:
    coarse = np.linspace(-5.0, 5.0, 2001)
    peak = float(np.max(potential.eval_deriv(0, coarse)))
    half_width = 1.0
    while half_width < 1e4:
        edge = max(potential.eval_deriv(0, half_width), potential.eval_deriv(0, -half_width))
        if edge < peak - drop:
            break
        half_width *= 2.0
    return half_width


def potential_moments(potential: Potential1D) -> Tuple[float, float]:
    """Mean and standard deviation of the density proportional to exp(g), by quadrature."""
    peak = float(np.max(potential.eval_deriv(0, np.linspace(-5.0, 5.0, 2001))))
    half_width = _support_half_width(potential)

    def weight(t, power):
        return t ** power * math.exp(potential.eval_deriv(0, t) - peak)

    z, _ = integrate.quad(weight, -half_width, half_width, args=(0,), limit=200)
    m1, _ = integrate.quad(weight, -half_width, half_width, args=(1,), limit=200)
    m2, _ = integrate.quad(weight, -half_width, half_width, args=(2,), limit=200)
    mean = m1 / z
    return mean, math.sqrt(max(m2 / z - mean * mean, 0.0))


class GridInverseCdfSampler:
    """Draws from the density proportional to exp(g) by inverse CDF on a fine grid."""

    def __init__(self, potential: Potential1D, n_grid: int = 200001):
        half_width = _support_half_width(potential)
        self.grid = np.linspace(-half_width, half_width, n_grid)
        logp = potential.eval_deriv(0, self.grid)
        density = np.exp(logp - np.max(logp))
        cdf = integrate.cumulative_trapezoid(density, self.grid, initial=0.0)
        self.cdf = cdf / cdf[-1]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.interp(rng.random(size), self.cdf, self.grid)
