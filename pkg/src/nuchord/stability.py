"""
Closed-loop stability, stability margins and robustness certificates.

A controller c stabilizes p exactly when g = n_p n_c - d_p d_c is invertible
in S with identity index. The margin is the boundary infimum of
|g| / (|(n_p, d_p)| |(n_c, d_c)|), which equals 1/sup ||H(p, c)|| because the
closed-loop matrix has rank one at every boundary point.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boundary_algebra import StableElement
from .exceptions import BoundViolation, NotStabilizing, StabilityError
from .factorization import CoprimeFactorization
from .index import index_is_identity, index_of, is_invertible
from .logging import get_logger
from .metric import PlantLike, as_factorization, d_cr
from .sampling import adaptive_extremum
from .types import AlgebraInstance, Certificate, MarginResult, MetricResult

logger = get_logger({"component": "stability"})

THEOREM_SLACK = 1e-7


def _check_pair(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> AlgebraInstance:
    if cf_p.instance.kind is not cf_c.instance.kind:
        raise StabilityError(
            "plant and controller belong to different instances",
            {"plant": cf_p.instance.kind.value, "controller": cf_c.instance.kind.value},
        )
    return cf_p.instance


def _max_delay(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> float:
    return max(cf_p.max_delay, cf_c.max_delay)


def return_difference(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> StableElement:
    """g = n_p n_c - d_p d_c."""
    return cf_p.n * cf_c.n - cf_p.d * cf_c.d


@dataclass(frozen=True, eq=False)
class ClosedLoopMatrix:
    """
    H(p, c) = 1/(1 - pc) [[-pc, p], [-c, 1]] in factorized form.

    Pointwise H = [n_p; d_p] [-n_c, d_c] / (d_p d_c - n_p n_c).
    """
    plant: CoprimeFactorization
    controller: CoprimeFactorization

    def __post_init__(self) -> None:
        _check_pair(self.plant, self.controller)
        if (self.plant.d * self.controller.d - self.plant.n * self.controller.n).is_zero:
            raise StabilityError("1 - pc vanishes identically")

    def entries(self, thetas: np.ndarray) -> np.ndarray:
        """Stack of 2x2 matrices, one per boundary parameter."""
        n_p, d_p = self.plant.n.values(thetas), self.plant.d.values(thetas)
        n_c, d_c = self.controller.n.values(thetas), self.controller.d.values(thetas)
        scale = 1.0 / (d_p * d_c - n_p * n_c)
        matrices = np.empty(np.shape(thetas) + (2, 2), dtype=complex)
        matrices[..., 0, 0] = -n_p * n_c * scale
        matrices[..., 0, 1] = n_p * d_c * scale
        matrices[..., 1, 0] = -d_p * n_c * scale
        matrices[..., 1, 1] = d_p * d_c * scale
        return matrices

    def operator_norms(self, thetas: np.ndarray) -> np.ndarray:
        """Induced 2-norm of H at each parameter (largest singular value)."""
        return np.linalg.norm(self.entries(thetas), ord=2, axis=(-2, -1))


def stabilizes(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> bool:
    """Whether n_p n_c - d_p d_c is invertible in S with identity index."""
    instance = _check_pair(cf_p, cf_c)
    g = return_difference(cf_p, cf_c)
    report = is_invertible(g, instance)
    if not report.invertible:
        logger.debug("Return difference not invertible", min_modulus=report.min_modulus)
        return False
    index = index_of(g, instance)
    verdict = index_is_identity(index, instance)
    logger.debug("Stabilization index", index=index.to_dict(), stabilizes=verdict)
    return verdict


def margin_result(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> MarginResult:
    """Stability margin together with the grid it was resolved on."""
    instance = _check_pair(cf_p, cf_c)
    logger.log_computation_start("margin", instance=instance.kind.value)
    if not stabilizes(cf_p, cf_c):
        logger.log_computation_result("margin", 0.0, 0, 0.0, stabilizes=False)
        return MarginResult(0.0, False)

    def normalized_gap(thetas: np.ndarray) -> np.ndarray:
        n_p, d_p = cf_p.n.values(thetas), cf_p.d.values(thetas)
        n_c, d_c = cf_c.n.values(thetas), cf_c.d.values(thetas)
        norm_p = np.sqrt(np.abs(n_p) ** 2 + np.abs(d_p) ** 2)
        norm_c = np.sqrt(np.abs(n_c) ** 2 + np.abs(d_c) ** 2)
        return np.abs(n_p * n_c - d_p * d_c) / (norm_p * norm_c)

    extremum = adaptive_extremum(
        normalized_gap, instance, mode="min", max_delay=_max_delay(cf_p, cf_c), label="margin_inf"
    )
    value = float(min(max(extremum.value, 0.0), 1.0))
    logger.log_computation_result("margin", value, extremum.grid_size, extremum.achieved_tol, stabilizes=True)
    return MarginResult(value, True, extremum.grid_size, extremum.achieved_tol)


def margin(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> float:
    """Stability margin in [0, 1]; 0 when c does not stabilize p."""
    return margin_result(cf_p, cf_c).value


def margin_via_norm(cf_p: CoprimeFactorization, cf_c: CoprimeFactorization) -> float:
    """
    inf 1 / ||H(p, c)|| computed from singular values of the closed-loop matrix.

    sup_tol bounds the error of the returned margin, not of the norm.

    Raises:
        NotStabilizing: c does not stabilize p
    """
    instance = _check_pair(cf_p, cf_c)
    if not stabilizes(cf_p, cf_c):
        raise NotStabilizing("margin via the closed-loop norm needs a stabilizing controller")
    loop = ClosedLoopMatrix(cf_p, cf_c)

    def inverse_norms(thetas: np.ndarray) -> np.ndarray:
        return 1.0 / loop.operator_norms(thetas)

    extremum = adaptive_extremum(
        inverse_norms, instance, mode="min", max_delay=_max_delay(cf_p, cf_c), label="closed_loop_norm"
    )
    return float(extremum.value)


@dataclass(frozen=True)
class CertificateReport:
    """Certificate plus the computations it was assembled from."""
    certificate: Certificate
    nominal: MarginResult
    distance: MetricResult
    perturbed: Optional[MarginResult] = None


def certify_robust_report(
    p0: PlantLike,
    c: PlantLike,
    p: PlantLike,
    instance: AlgebraInstance,
    direct_mu: bool = False,
) -> CertificateReport:
    """
    Robust stabilization certificate mu(p, c) >= mu(p0, c) - d(p, p0).

    Raises:
        BoundViolation: The directly computed margin falls below the bound
    """
    cf_p0 = as_factorization(p0, instance)
    cf_c = as_factorization(c, instance)
    cf_p = as_factorization(p, instance)

    nominal = margin_result(cf_p0, cf_c)
    distance = d_cr(cf_p, cf_p0, instance)
    lower_bound = nominal.value - distance.value
    perturbed = margin_result(cf_p, cf_c) if direct_mu else None

    if perturbed is not None and perturbed.value < lower_bound - THEOREM_SLACK:
        raise BoundViolation(
            "perturbed margin is below the certified lower bound",
            {"mu_perturbed": perturbed.value, "lower_bound": lower_bound},
        )

    certificate = Certificate(
        mu_nominal=nominal.value,
        distance=distance.value,
        lower_bound=lower_bound,
        stabilized=lower_bound > 0.0,
        mu_perturbed=perturbed.value if perturbed is not None else None,
    )
    logger.info(
        "Robustness certificate",
        mu_nominal=nominal.value,
        distance=distance.value,
        lower_bound=lower_bound,
        stabilized=certificate.stabilized,
    )
    return CertificateReport(certificate, nominal, distance, perturbed)


def certify_robust(
    p0: PlantLike,
    c: PlantLike,
    p: PlantLike,
    instance: AlgebraInstance,
    direct_mu: bool = False,
) -> Certificate:
    """Certificate for p being stabilized by c, given the nominal pair (p0, c)."""
    return certify_robust_report(p0, c, p, instance, direct_mu).certificate


def robustness_radius(p0: PlantLike, c: PlantLike, instance: AlgebraInstance) -> float:
    """Radius of the metric ball around p0 in which c keeps stabilizing."""
    return margin(as_factorization(p0, instance), as_factorization(c, instance))
