#!/usr/bin/env python3
"""
Sampler Errors

Typed exceptions shared by the target, matrix-function, proposal, sampler,
diagnostics and experiment modules. Every error is a ``ValueError`` so code
that only knows about ``ValueError`` still catches them.
"""

from typing import Optional


class SamplerError(ValueError):
    """Base class for all errors raised by this package."""


class NonPositiveSpectrum(SamplerError):
    """A square root, logarithm or log-determinant met a non-positive eigenvalue image."""

    def __init__(self, eigenvalue: float, image: float, label: str = ""):
        self.eigenvalue = float(eigenvalue)
        self.image = float(image)
        self.label = label
        where = f" in {label}" if label else ""
        super().__init__(
            f"non-positive spectrum{where}: eigenvalue {self.eigenvalue:.6g} "
            f"maps to {self.image:.6g}"
        )


class ScaleNotPositive(SamplerError):
    """The proposal scale factor S(x, h) is not positive definite."""

    def __init__(self, variant: str, min_value: float, detail: str = ""):
        self.variant = variant
        self.min_value = float(min_value)
        message = f"{variant} scale is not positive (smallest value {self.min_value:.6g})"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class EmptyTrace(SamplerError):
    """A diagnostic needs more post-burn-in records than the trace holds."""


class NegativeEstimate(SamplerError):
    """A Monte-Carlo estimate of a squared quantity came out significantly negative."""

    def __init__(self, variant: str, mean: float, std_error: float):
        self.variant = variant
        self.mean = float(mean)
        self.std_error = float(std_error)
        super().__init__(
            f"K^{variant}: Monte-Carlo average {self.mean:.6g} is negative beyond "
            f"3 standard errors ({self.std_error:.3g})"
        )


class DegenerateK(SamplerError):
    """The limiting speed has no maximiser because K = 0."""


class ConfigError(SamplerError):
    """An experiment configuration violates the schema."""

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = f"line {line}, " if line is not None else ""
        super().__init__(f"{location}field '{field}': {message}")


class ChainError(SamplerError):
    """A chain step failed; wraps the original error with the step index."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {cause}")
