"""
Exception classes for the nuchord package.

This module defines the exception hierarchy used throughout the package for
consistent error handling, structured logging and CLI exit-code mapping.
"""

from typing import Optional, Any, Dict


class NuChordError(Exception):
    """
    Base exception for all nuchord errors.

    All custom exceptions in the package inherit from this class so callers
    can catch a single type and still inspect structured details.
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        """
        Initialize the exception with a message and optional details.

        Args:
            message: Human-readable error message
            details: Optional dictionary containing additional error context
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        """Return string representation of the exception."""
        if self.details:
            return f"{self.message} (Details: {self.details})"
        return self.message


class ConfigurationError(NuChordError):
    """
    Exception raised for configuration and input-file errors.

    This includes TOML parsing errors, malformed plant spec JSON, invalid
    tolerances and mismatched algebra instances between input files.
    """
    pass


# --- boundary algebra -------------------------------------------------------

class AlgebraError(NuChordError):
    """Errors raised while building or evaluating boundary functions."""
    pass


class InvalidElement(AlgebraError):
    """Coefficient data does not describe an element of the stable ring."""
    pass


class DomainMismatch(AlgebraError):
    """A point, element or instance belongs to a different boundary domain."""
    pass


class EvaluationAtInfinityUndefined(AlgebraError):
    """A delayed half-plane term was evaluated at the point at infinity."""
    pass


class GridMismatch(AlgebraError):
    """Pointwise operation on sampled curves with different grids."""
    pass


# --- numerical convergence --------------------------------------------------

class ConvergenceError(NuChordError):
    """Adaptive numerical procedures that could not meet their tolerance."""
    pass


class NoConvergence(ConvergenceError):
    """Grid refinement budget exhausted before successive estimates agreed."""
    pass


class NonResolvableWinding(ConvergenceError):
    """Phase increments could not be brought below pi by bisection."""
    pass


# --- invertibility and index ------------------------------------------------

class InvertibilityError(NuChordError):
    """Errors related to membership in inv S and the index map."""
    pass


class CurveThroughZero(InvertibilityError):
    """A sampled curve passes through (or too close to) the origin."""
    pass


class NotInvertible(InvertibilityError):
    """An expression is not invertible in the boundary algebra."""
    pass


class APNotInvertible(InvertibilityError):
    """The almost-periodic part of an expression is not invertible."""
    pass


class NotInvertibleOnCircle(InvertibilityError):
    """A disk function vanishes on one of the circles of the radii schedule."""
    pass


class IndexNotStabilized(InvertibilityError):
    """Winding numbers on the last circles of the radii schedule disagree."""
    pass


class VariantMismatch(InvertibilityError):
    """An index value does not belong to the group of the given instance."""
    pass


# --- factorization ----------------------------------------------------------

class FactorizationError(NuChordError):
    """Errors raised while constructing or validating coprime factorizations."""
    pass


class NotCoprime(FactorizationError):
    """The numerator and denominator share a zero on the closed region."""
    pass


class SolveFailed(FactorizationError):
    """The Sylvester-type Bezout system is numerically singular."""
    pass


class MissingWitness(FactorizationError):
    """A Bezout witness was required but the factorization carries none."""
    pass


class NotAUnit(FactorizationError):
    """A rescaling factor is not invertible in the stable ring."""
    pass


class SpectralFactorizationFailed(FactorizationError):
    """The spectral density has roots on the imaginary axis."""
    pass


class DegenerateDenominator(FactorizationError):
    """sqrt(|n|^2 + |d|^2) vanished at a boundary sample."""
    pass


class NotNormalized(FactorizationError):
    """A factorization passed as normalized violates |n|^2 + |d|^2 = 1."""
    pass


# --- stability --------------------------------------------------------------

class StabilityError(NuChordError):
    """Errors raised by closed-loop and robustness computations."""
    pass


class NotStabilizing(StabilityError):
    """The controller does not stabilize the plant."""
    pass


class BoundViolation(StabilityError):
    """
    The robustness inequality mu(p, c) >= mu(p0, c) - d(p, p0) failed.

    The inequality is a theorem, so a violation beyond tolerance signals an
    under-resolved grid rather than a property of the plants.
    """
    pass
