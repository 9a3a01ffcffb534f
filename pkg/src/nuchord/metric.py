"""
Chordal distance between plants given by coprime factorizations.

kappa is the pointwise chordal distance of two factorizations; d_cr is its
supremum when n1* n2 + d1* d2 is invertible with identity index, and 1
otherwise. d_nu is the same computation restricted to normalized pairs.
"""

from typing import Optional, Tuple, Union

import numpy as np

from .exceptions import DegenerateDenominator, DomainMismatch, NotNormalized
from .factorization import (
    NORMALIZATION_TOL,
    CoprimeFactorization,
    Fraction,
    NormalizedCF,
    coprime_factorize,
)
from .boundary_algebra import BoundaryExpression, sup_modulus
from .index import index_is_identity, index_of, is_invertible
from .logging import get_logger
from .sampling import adaptive_extremum, boundary_grid
from .types import (
    AlgebraInstance,
    Branch,
    Domain,
    GridReport,
    IndexCondition,
    MetricResult,
    SampledCurve,
)

logger = get_logger({"component": "metric"})

PlantLike = Union[Fraction, CoprimeFactorization]


def as_factorization(p: PlantLike, instance: AlgebraInstance) -> CoprimeFactorization:
    """Factorize a plant unless it already is a factorization."""
    if isinstance(p, CoprimeFactorization):
        if p.instance.kind is not instance.kind:
            raise DomainMismatch(
                "factorization belongs to a different instance",
                {"factorization": p.instance.kind.value, "instance": instance.kind.value},
            )
        return p
    return coprime_factorize(p, instance)


def _common_instance(cf1: CoprimeFactorization, cf2: CoprimeFactorization) -> AlgebraInstance:
    if cf1.instance.kind is not cf2.instance.kind:
        raise DomainMismatch(
            "factorizations belong to different instances",
            {"first": cf1.instance.kind.value, "second": cf2.instance.kind.value},
        )
    return cf1.instance


def kappa_values(cf1: CoprimeFactorization, cf2: CoprimeFactorization, thetas: np.ndarray) -> np.ndarray:
    """
    Pointwise |n1 d2 - n2 d1| / (|(n1, d1)| |(n2, d2)|).

    Raises:
        DegenerateDenominator: A factor norm falls below the invertibility tolerance
    """
    thetas = np.asarray(thetas, dtype=float)
    n1, d1 = cf1.n.values(thetas), cf1.d.values(thetas)
    n2, d2 = cf2.n.values(thetas), cf2.d.values(thetas)
    norm1 = np.sqrt(np.abs(n1) ** 2 + np.abs(d1) ** 2)
    norm2 = np.sqrt(np.abs(n2) ** 2 + np.abs(d2) ** 2)
    floor = cf1.instance.tolerances.invertibility_tol
    for norm in (norm1, norm2):
        if np.any(norm < floor):
            j = int(np.argmin(norm))
            raise DegenerateDenominator(
                "factor norm vanishes at a boundary point",
                {"theta": float(thetas[j]), "norm": float(norm[j])},
            )
    return np.minimum(np.abs(n1 * d2 - n2 * d1) / (norm1 * norm2), 1.0)


def kappa(cf1: CoprimeFactorization, cf2: CoprimeFactorization, grid: np.ndarray) -> SampledCurve:
    """Chordal pointwise distance sampled on a grid."""
    _common_instance(cf1, cf2)
    thetas = np.asarray(grid, dtype=float)
    return SampledCurve(thetas, kappa_values(cf1, cf2, thetas))


def kappa_grid(cf1: CoprimeFactorization, cf2: CoprimeFactorization) -> np.ndarray:
    """Default grid for exporting kappa samples."""
    instance = _common_instance(cf1, cf2)
    return boundary_grid(instance, instance.grid.initial_size, max(cf1.max_delay, cf2.max_delay))


def cross_expression(cf1: CoprimeFactorization, cf2: CoprimeFactorization) -> BoundaryExpression:
    """n1* n2 + d1* d2."""
    return cf1.n.conj() * cf2.n + cf1.d.conj() * cf2.d


def index_condition(
    cf1: CoprimeFactorization,
    cf2: CoprimeFactorization,
    instance: Optional[AlgebraInstance] = None,
) -> IndexCondition:
    """Invertibility and index of n1* n2 + d1* d2."""
    instance = instance or _common_instance(cf1, cf2)
    f = cross_expression(cf1, cf2)
    report = is_invertible(f, instance)
    if not report.invertible:
        logger.debug("Index condition fails: not invertible", min_modulus=report.min_modulus)
        return IndexCondition(False, report.min_modulus, None, False, report.ambiguous)
    index = index_of(f, instance)
    holds = index_is_identity(index, instance)
    logger.debug("Index condition evaluated", index=index.to_dict(), holds=holds)
    return IndexCondition(True, report.min_modulus, index, holds, report.ambiguous)


def _chordal_sup(
    cf1: CoprimeFactorization,
    cf2: CoprimeFactorization,
    instance: AlgebraInstance,
    operation: str,
) -> MetricResult:
    logger.log_computation_start(operation, instance=instance.kind.value)
    condition = index_condition(cf1, cf2, instance)
    max_delay = max(cf1.max_delay, cf2.max_delay)
    window = instance.ap_window if instance.domain is Domain.HALF_PLANE and max_delay > 0 else None

    if not condition.holds:
        report = GridReport(0, 0.0, condition.ambiguous, window)
        result = MetricResult(1.0, Branch.INDEX_CONDITION_FAILED, condition, report)
        logger.log_computation_result(operation, 1.0, 0, 0.0, branch=result.branch.value)
        return result

    def chordal(thetas: np.ndarray) -> np.ndarray:
        return kappa_values(cf1, cf2, thetas)

    extremum = adaptive_extremum(chordal, instance, mode="max", max_delay=max_delay, label="kappa_sup")
    value = float(min(max(extremum.value, 0.0), 1.0))
    report = GridReport(extremum.grid_size, extremum.achieved_tol, condition.ambiguous, window)
    result = MetricResult(value, Branch.KAPPA_SUP, condition, report)
    logger.log_computation_result(
        operation, value, extremum.grid_size, extremum.achieved_tol, branch=result.branch.value
    )
    return result


def d_cr(p1: PlantLike, p2: PlantLike, instance: Optional[AlgebraInstance] = None) -> MetricResult:
    """
    Chordal metric between two plants.

    Args:
        p1: First plant (fraction or factorization)
        p2: Second plant
        instance: Algebra instance (taken from the factorizations if omitted)

    Returns:
        MetricResult with the value, branch and condition details
    """
    if instance is None:
        if isinstance(p1, CoprimeFactorization):
            instance = p1.instance
        elif isinstance(p2, CoprimeFactorization):
            instance = p2.instance
        else:
            raise ValueError("an instance is needed to factorize rational plants")
    cf1 = as_factorization(p1, instance)
    cf2 = as_factorization(p2, instance)
    return _chordal_sup(cf1, cf2, instance, "d_cr")


def _normalization_residual(cf: CoprimeFactorization) -> float:
    if isinstance(cf, NormalizedCF):
        return cf.residual
    return sup_modulus(cf.norm_squared() - 1.0, cf.instance)


def d_nu(ncf1: CoprimeFactorization, ncf2: CoprimeFactorization, instance: Optional[AlgebraInstance] = None) -> MetricResult:
    """
    The same metric on normalized factorizations.

    Raises:
        NotNormalized: A normalization residual exceeds 1e-8
    """
    instance = instance or _common_instance(ncf1, ncf2)
    for position, cf in enumerate((ncf1, ncf2), start=1):
        residual = _normalization_residual(cf)
        if residual > NORMALIZATION_TOL:
            raise NotNormalized(
                "factorization is not normalized",
                {"argument": position, "residual": residual},
            )
    return _chordal_sup(ncf1, ncf2, instance, "d_nu")


def cross_term_identity(
    a: np.ndarray,
    b: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Both sides of 1 - |a*beta - b*alpha|^2 / N = |a*conj(alpha) + b*conj(beta)|^2 / N
    with N = (|a|^2 + |b|^2)(|alpha|^2 + |beta|^2).
    """
    denom = (np.abs(a) ** 2 + np.abs(b) ** 2) * (np.abs(alpha) ** 2 + np.abs(beta) ** 2)
    lhs = 1.0 - np.abs(a * beta - b * alpha) ** 2 / denom
    rhs = np.abs(a * np.conj(alpha) + b * np.conj(beta)) ** 2 / denom
    return lhs, rhs
