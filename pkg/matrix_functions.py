#!/usr/bin/env python3
"""
Matrix Functions of Structured Jacobians

Evaluates the matrix functionals used by the Ozaki-type proposals

    T1(M, h, a) = (aM)^-1 (exp((ah/2) M) - I)
    T2(M, h, a) = (aM)^-1 (exp(-(a h^2/4) M^2) - I)
    T3(M, h, a) = (aM)^-2 (exp((ah/2) M) - I - (ah/2) M)

on structured representations of a symmetric Jacobian (multiple of the
identity, diagonal, symmetric tridiagonal, dense symmetric). Every functional
is a scalar map applied to the spectrum; near the removable singularity at 0
the scalar maps switch to a truncated power series.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from sampler_errors import NonPositiveSpectrum

logger = logging.getLogger(__name__)

# |z| below which exp-type quotients are summed as a power series.
SERIES_THRESHOLD = 1e-4
SERIES_TERMS = 12

_PHI_COEFFS = {
    order: np.array([1.0 / math.factorial(k + order) for k in range(SERIES_TERMS)])
    for order in (1, 2)
}


def _as_output(values, like):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


def phi_series(order: int, z):
    """Truncated power series of phi_order(z) = sum_k z^k / (k + order)!."""
    z = np.asarray(z, dtype=float)
    coeffs = _PHI_COEFFS[order]
    result = np.full_like(z, coeffs[-1])
    for c in coeffs[-2::-1]:
        result = result * z + c
    return _as_output(result, z)


def phi_direct(order: int, z):
    """Closed form of phi_1(z) = (e^z - 1)/z or phi_2(z) = (e^z - 1 - z)/z^2."""
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if order == 1:
            result = np.expm1(z) / z
        elif order == 2:
            result = (np.expm1(z) - z) / (z * z)
        else:
            raise ValueError(f"phi order must be 1 or 2, got {order}")
    return _as_output(result, z)


def phi(order: int, z):
    """Guarded phi function: series for |z| <= SERIES_THRESHOLD, closed form elsewhere."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) <= SERIES_THRESHOLD
    safe = np.where(small, 1.0, z)
    result = np.where(small, phi_series(order, z), phi_direct(order, safe))
    return _as_output(result, z)


def t1_scalar(t, h: float, a: float = 1.0):
    """(e^{(ah/2)t} - 1) / (a t); equals h/2 at t = 0 and is positive everywhere."""
    t = np.asarray(t, dtype=float)
    return _as_output(0.5 * h * phi(1, 0.5 * a * h * t), t)


def t2_scalar(t, h: float, a: float = 1.0):
    """(e^{-(a h^2/4) t^2} - 1) / (a t); odd in t, zero at t = 0."""
    t = np.asarray(t, dtype=float)
    w = 0.25 * a * h * h * t * t
    return _as_output(-0.25 * h * h * t * phi(1, -w), t)


def t3_scalar(t, h: float, a: float = 1.0):
    """(e^{(ah/2)t} - 1 - (ah/2)t) / (a t)^2; equals h^2/8 at t = 0, never negative."""
    t = np.asarray(t, dtype=float)
    return _as_output(0.25 * h * h * phi(2, 0.5 * a * h * t), t)


def variance_map_spectrum(variant: str, t, h: float, a4: float = 1.0, a5: float = 1.0):
    """
    Scalar map whose matrix version sits under the square root of the Ozaki scales.

    Args:
        variant: 'mO', 'bO' or 'gbO'
        t: eigenvalue(s) of the Jacobian
        h: step size
        a4, a5: gbO parameters (ignored for mO and bO)

    Returns:
        Value(s) of the variance spectrum at t
    """
    t = np.asarray(t, dtype=float)
    if variant == "mO":
        result = t1_scalar(t, 2.0 * h, 1.0) - (h * h / 3.0) * t
    elif variant == "bO":
        result = t1_scalar(t, 2.0 * h, 1.0) + t2_scalar(t, 2.0 * h, 1.0) / 3.0
    elif variant == "gbO":
        result = t1_scalar(t, 2.0 * h, a4) + (0.5 * a4 - 1.0 / 6.0) * t2_scalar(t, 2.0 * h, a5)
    else:
        raise ValueError(f"unknown variance variant '{variant}'")
    return _as_output(result, t)


@dataclass(frozen=True)
class SpectralFunctional:
    """A scalar map applied to the spectrum of a symmetric matrix."""

    label: str
    scalar_map: Callable[[np.ndarray], np.ndarray]
    requires_positive: bool = False
    inner: Optional["SpectralFunctional"] = None

    def __call__(self, eigenvalues: np.ndarray) -> np.ndarray:
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        values = eigenvalues if self.inner is None else self.inner(eigenvalues)
        if self.requires_positive:
            bad = ~(values > 0)
            if np.any(bad):
                idx = int(np.argmax(bad)) if np.all(np.isnan(values[bad])) else int(
                    np.nanargmin(np.where(bad, values, np.inf)))
                raise NonPositiveSpectrum(eigenvalues[idx], values[idx], self.label)
        return np.asarray(self.scalar_map(values), dtype=float)


def t1_functional(h: float, a: float = 1.0) -> SpectralFunctional:
    return SpectralFunctional(f"T1(h={h:g},a={a:g})", partial(t1_scalar, h=h, a=a))


def t2_functional(h: float, a: float = 1.0) -> SpectralFunctional:
    return SpectralFunctional(f"T2(h={h:g},a={a:g})", partial(t2_scalar, h=h, a=a))


def t3_functional(h: float, a: float = 1.0) -> SpectralFunctional:
    return SpectralFunctional(f"T3(h={h:g},a={a:g})", partial(t3_scalar, h=h, a=a))


def variance_functional(variant: str, h: float, a4: float = 1.0, a5: float = 1.0) -> SpectralFunctional:
    return SpectralFunctional(
        f"{variant}_variance(h={h:g})",
        partial(variance_map_spectrum, variant, h=h, a4=a4, a5=a5),
    )


def sqrt_of(inner: Optional[SpectralFunctional] = None) -> SpectralFunctional:
    label = "sqrt" if inner is None else f"sqrt({inner.label})"
    return SpectralFunctional(label, np.sqrt, requires_positive=True, inner=inner)


def log_of(inner: Optional[SpectralFunctional] = None) -> SpectralFunctional:
    label = "log" if inner is None else f"log({inner.label})"
    return SpectralFunctional(label, np.log, requires_positive=True, inner=inner)


class JacobianRep(ABC):
    """Structured symmetric matrix: the Jacobian of the drift or a function of it."""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def matvec(self, v: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def solve(self, v: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def eigenvalues(self) -> np.ndarray:
        ...

    @abstractmethod
    def apply(self, functional: SpectralFunctional) -> "JacobianRep":
        ...

    @abstractmethod
    def affine(self, shift: float, scale: float) -> "JacobianRep":
        """Return shift * I + scale * self in the same structure."""

    @abstractmethod
    def to_dense(self) -> np.ndarray:
        ...

    def min_eigenvalue(self) -> float:
        return float(np.min(self.eigenvalues()))

    def log_det(self) -> float:
        lam = self.eigenvalues()
        if np.any(~(lam > 0)):
            idx = int(np.argmin(lam))
            raise NonPositiveSpectrum(lam[idx], lam[idx], "log_det")
        return float(np.sum(np.log(lam)))


@dataclass(frozen=True, eq=False)
class ScalarRep(JacobianRep):
    """value * I_dim"""

    value: float
    size: int

    @property
    def dim(self) -> int:
        return self.size

    def matvec(self, v):
        return self.value * np.asarray(v, dtype=float)

    def solve(self, v):
        return np.asarray(v, dtype=float) / self.value

    def eigenvalues(self):
        return np.full(self.size, float(self.value))

    def apply(self, functional):
        return ScalarRep(float(functional(np.array([self.value]))[0]), self.size)

    def affine(self, shift, scale):
        return ScalarRep(shift + scale * self.value, self.size)

    def to_dense(self):
        return self.value * np.eye(self.size)

    def min_eigenvalue(self):
        return float(self.value)

    def log_det(self):
        if not self.value > 0:
            raise NonPositiveSpectrum(self.value, self.value, "log_det")
        return self.size * math.log(self.value)


@dataclass(frozen=True, eq=False)
class DiagonalRep(JacobianRep):
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def matvec(self, v):
        return self.entries * v

    def solve(self, v):
        return np.asarray(v, dtype=float) / self.entries

    def eigenvalues(self):
        return self.entries

    def apply(self, functional):
        return DiagonalRep(functional(self.entries))

    def affine(self, shift, scale):
        return DiagonalRep(shift + scale * self.entries)

    def to_dense(self):
        return np.diag(self.entries)


@dataclass(frozen=True, eq=False)
class DenseSymmetricRep(JacobianRep):
    """Dense symmetric matrix, symmetrised at construction, with cached eigenpairs."""

    matrix: np.ndarray
    eigen: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    @classmethod
    def from_eigenpairs(cls, eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> "DenseSymmetricRep":
        matrix = (eigenvectors * eigenvalues) @ eigenvectors.T
        return cls(matrix, eigen=(np.asarray(eigenvalues, dtype=float), eigenvectors))

    @cached_property
    def eigenpairs(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.eigen is not None:
            return self.eigen
        return scipy.linalg.eigh(self.matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v):
        return self.matrix @ v

    def solve(self, v):
        lam, vecs = self.eigenpairs
        return vecs @ ((vecs.T @ v) / lam)

    def eigenvalues(self):
        return self.eigenpairs[0]

    def apply(self, functional):
        lam, vecs = self.eigenpairs
        return DenseSymmetricRep.from_eigenpairs(functional(lam), vecs)

    def affine(self, shift, scale):
        matrix = shift * np.eye(self.dim) + scale * self.matrix
        if "eigenpairs" in self.__dict__ or self.eigen is not None:
            lam, vecs = self.eigenpairs
            return DenseSymmetricRep(matrix, eigen=(shift + scale * lam, vecs))
        return DenseSymmetricRep(matrix)

    def to_dense(self):
        return self.matrix


@dataclass(frozen=True, eq=False)
class SymTridiagonalRep(JacobianRep):
    """Symmetric tridiagonal matrix given by its diagonal and first off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))
        object.__setattr__(self, "offdiag", np.asarray(self.offdiag, dtype=float))
        if self.offdiag.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ValueError("offdiag must have length dim - 1")

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    @cached_property
    def eigenpairs(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.dim == 1:
            return self.diag.copy(), np.ones((1, 1))
        return scipy.linalg.eigh_tridiagonal(self.diag, self.offdiag)

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def solve(self, v):
        ab = np.zeros((3, self.dim))
        ab[0, 1:] = self.offdiag
        ab[1] = self.diag
        ab[2, :-1] = self.offdiag
        return scipy.linalg.solve_banded((1, 1), ab, v)

    def eigenvalues(self):
        if "eigenpairs" in self.__dict__:
            return self.eigenpairs[0]
        if self.dim == 1:
            return self.diag.copy()
        return scipy.linalg.eigh_tridiagonal(self.diag, self.offdiag, eigvals_only=True)

    def apply(self, functional):
        if not np.any(self.offdiag):
            return DiagonalRep(functional(self.diag))
        lam, vecs = self.eigenpairs
        return DenseSymmetricRep.from_eigenpairs(functional(lam), vecs)

    def affine(self, shift, scale):
        return SymTridiagonalRep(shift + scale * self.diag, scale * self.offdiag)

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def ldl_pivots(self) -> np.ndarray:
        """Pivots r_k = theta_k / theta_{k-1} of the leading principal minors."""
        pivots = np.empty(self.dim)
        pivots[0] = self.diag[0]
        sq = self.offdiag ** 2
        for k in range(1, self.dim):
            pivots[k] = self.diag[k] - sq[k - 1] / pivots[k - 1]
        return pivots

    def is_positive_definite(self) -> bool:
        with np.errstate(divide="ignore", invalid="ignore"):
            return bool(np.all(self.ldl_pivots() > 0))

    def min_eigenvalue(self):
        return float(np.min(self.eigenvalues()))

    def log_det(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            pivots = self.ldl_pivots()
        if np.all(pivots > 0):
            return float(np.sum(np.log(pivots)))
        return super().log_det()


def apply_spectral(rep: JacobianRep, functional: SpectralFunctional) -> JacobianRep:
    """Apply a spectral functional: V diag(phi(lambda)) V^T in the structure of rep."""
    return rep.apply(functional)


def log_det(rep: JacobianRep) -> float:
    """Log-determinant of a positive definite representation."""
    return rep.log_det()


@dataclass(frozen=True)
class Assumption1Report:
    holds: bool
    min_value: float
    argmin: float
    tail_coefficient: float


def assumption1_function(t, a4: float, a5: float):
    """t -> (e^{a4 t} - 1)/(a4 t) + (a4/2 - 1/6)(e^{-a5 t^2} - 1)/(a5 t)"""
    t = np.asarray(t, dtype=float)
    result = phi(1, a4 * t) - (0.5 * a4 - 1.0 / 6.0) * t * phi(1, -a5 * t * t)
    return _as_output(result, t)


def assumption1_check(a4: float, a5: float, t_min: float = -50.0, t_max: float = 50.0,
                      step: float = 0.01) -> Assumption1Report:
    """
    Check positivity of the gbO variance spectrum on a grid plus both tails.

    As t -> +inf the exponential term dominates and the function is positive.
    As t -> -inf it behaves like (1/a4 + (a4/2 - 1/6)/a5) / |t|, so the left
    tail is positive iff that coefficient is.
    """
    if a4 <= 0 or a5 <= 0:
        raise ValueError(f"a4 and a5 must be positive, got a4={a4}, a5={a5}")
    n = int(round((t_max - t_min) / step)) + 1
    grid = np.linspace(t_min, t_max, n)
    with np.errstate(over="ignore"):
        values = assumption1_function(grid, a4, a5)
    idx = int(np.argmin(values))
    tail = 1.0 / a4 + (0.5 * a4 - 1.0 / 6.0) / a5
    holds = bool(values[idx] > 0 and tail > 0)
    if not holds:
        logger.warning("gbO positivity condition fails for a4=%g, a5=%g (min %g at t=%g, tail %g)",
                       a4, a5, values[idx], grid[idx], tail)
    return Assumption1Report(holds, float(values[idx]), float(grid[idx]), float(tail))
