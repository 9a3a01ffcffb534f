"""
Invariant suite behind `nuchord selftest` and the delay-plant worked example.

Every check draws its samples from a seeded generator and reports the worst
deviation it saw against a fixed threshold.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boundary_algebra import StableElement
from .exceptions import NuChordError
from .factorization import CoprimeFactorization, Fraction, coprime_factorize, normalized_cf_rational, unit_rescale
from .index import winding_number
from .logging import get_logger
from .metric import cross_term_identity, d_cr, d_nu
from .plant_spec import load_bundled_spec
from .progress import CheckProgress
from .randomized import (
    bezout_controller,
    default_rng,
    expected_disk_winding,
    perturb_plant,
    random_disk_rational,
    random_rational_plant,
    random_unit,
)
from .sampling import uniform_thetas
from .stability import certify_robust, margin, margin_result, margin_via_norm
from .types import AlgebraInstance, AppConfig, Branch, InstanceKind, SampledCurve

logger = get_logger({"component": "selftest"})

EXAMPLE_PARAMETERS: Tuple[float, ...] = (0.8, 0.9, 1.1, 1.2, 1.4)
EXAMPLE_TOLERANCE = 1e-6
# Reported inverse margin of the nominal delay loop is about 3.224.
EXAMPLE_MU_INVERSE_RANGE = (3.20, 3.25)
CERTIFIED_INTERVAL = (2.0 / 3.0, 1.5)

FULL_COUNTS: Dict[str, int] = {
    "metric_axioms": 200,
    "winding_oracle": 100,
    "cross_term_identity": 10_000,
    "robust_bound": 100,
    "margin_agreement": 50,
    "nu_oracle": 50,
    "cf_invariance": 50,
}
QUICK_COUNTS: Dict[str, int] = {
    "metric_axioms": 5,
    "winding_oracle": 20,
    "cross_term_identity": 1_000,
    "robust_bound": 5,
    "margin_agreement": 5,
    "nu_oracle": 5,
    "cf_invariance": 5,
}


@dataclass(frozen=True)
class CheckResult:
    """
    Outcome of one self-test check.

    Attributes:
        name: Check name
        passed: Whether the worst deviation stayed within the threshold
        worst_deviation: Largest deviation seen over all samples
        threshold: Allowed deviation
        count: Number of samples
        details: Extra context (failing sample, error message)
    """
    name: str
    passed: bool
    worst_deviation: float
    threshold: float
    count: int
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_deviation": self.worst_deviation,
            "threshold": self.threshold,
            "count": self.count,
            "details": self.details,
        }


# --- worked example ----------------------------------------------------------

def closed_form_distance(a: float) -> float:
    """Distance between 1/(s - e^{-s}) and 1/(s - a e^{-s})."""
    return abs(a - 1.0) / math.sqrt(2.0 * (1.0 + a * a))


def example_plants(instance: AlgebraInstance) -> Tuple[Fraction, Fraction]:
    """Nominal plant and controller of the delay example."""
    nominal = load_bundled_spec("p1.json").to_fraction(instance)
    controller = load_bundled_spec("controller.json").to_fraction(instance)
    return nominal, controller


def example_perturbation(instance: AlgebraInstance, a: float) -> Fraction:
    return load_bundled_spec("pa_template.json", parameter=a).to_fraction(instance)


def example_distances(instance: AlgebraInstance, parameters: Sequence[float] = EXAMPLE_PARAMETERS) -> List[Dict[str, float]]:
    """Computed distance next to the closed form for each parameter."""
    nominal, _ = example_plants(instance)
    rows = []
    for a in parameters:
        result = d_cr(nominal, example_perturbation(instance, a), instance)
        rows.append({"a": float(a), "d_cr": result.value, "closed_form": closed_form_distance(a)})
    return rows


def certification_grid(count: int = 50, inset: float = 0.01) -> np.ndarray:
    low, high = CERTIFIED_INTERVAL
    return np.linspace(low + inset, high - inset, count)


def count_certified(instance: AlgebraInstance, parameters: Sequence[float]) -> int:
    nominal, controller = example_plants(instance)
    return sum(
        1
        for a in parameters
        if certify_robust(nominal, controller, example_perturbation(instance, float(a)), instance).stabilized
    )


# --- checks ------------------------------------------------------------------

def _factorized(p: Fraction, instance: AlgebraInstance) -> CoprimeFactorization:
    return coprime_factorize(p, instance)


def check_metric_axioms(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """Symmetry within 1e-9, triangle inequality within 1e-7, d(p, p) = 0."""
    symmetry = triangle = identity = 0.0
    for _ in range(count):
        base = random_rational_plant(rng)
        cf1, cf2, cf3 = (_factorized(perturb_plant(rng, base, 0.1), instance) for _ in range(3))
        d12 = d_cr(cf1, cf2, instance).value
        d21 = d_cr(cf2, cf1, instance).value
        d13 = d_cr(cf1, cf3, instance).value
        d23 = d_cr(cf2, cf3, instance).value
        self_distance = d_cr(cf1, cf1, instance)
        symmetry = max(symmetry, abs(d12 - d21))
        triangle = max(triangle, d13 - d12 - d23)
        if self_distance.branch is not Branch.KAPPA_SUP:
            identity = math.inf
        identity = max(identity, self_distance.value)
    passed = symmetry <= 1e-9 and triangle <= 1e-7 and identity == 0.0
    return CheckResult(
        "metric_axioms",
        passed,
        max(symmetry, triangle, identity),
        1e-7,
        count,
        {"symmetry": symmetry, "triangle": triangle, "identity": identity},
    )


def check_winding_oracle(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """Winding numbers against zeros-minus-poles counts from companion roots."""
    thetas = uniform_thetas(instance.grid.initial_size)
    mismatches = 0
    for _ in range(count):
        rational = random_disk_rational(rng)

        def on_circle(t: np.ndarray) -> np.ndarray:
            return rational(np.exp(1j * t))

        curve = SampledCurve(thetas, on_circle(thetas), closed=True)
        computed = winding_number(curve, on_circle, max_depth=instance.grid.refinement_depth)
        if computed != expected_disk_winding(rational):
            mismatches += 1
    return CheckResult("winding_oracle", mismatches == 0, float(mismatches), 0.0, count)


def check_cross_term_identity(rng: np.random.Generator, count: int) -> CheckResult:
    """Both sides of the pointwise cross-term identity on random complex quadruples."""
    a, b, alpha, beta = (rng.standard_normal(count) + 1j * rng.standard_normal(count) for _ in range(4))
    lhs, rhs = cross_term_identity(a, b, alpha, beta)
    worst = float(np.max(np.abs(lhs - rhs)))
    return CheckResult("cross_term_identity", worst <= 1e-12, worst, 1e-12, count)


def check_robust_bound(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """mu(p, c) >= mu(p0, c) - d(p, p0) for Bezout controllers and perturbed plants."""
    worst = -math.inf
    for _ in range(count):
        p0 = random_rational_plant(rng)
        cf0 = _factorized(p0, instance)
        controller = bezout_controller(cf0)
        cf_p = _factorized(perturb_plant(rng, p0, 0.05), instance)
        lower_bound = margin(cf0, controller) - d_cr(cf_p, cf0, instance).value
        worst = max(worst, lower_bound - margin(cf_p, controller))
    worst = max(worst, 0.0)
    return CheckResult("robust_bound", worst <= 1e-7, worst, 1e-7, count)


def check_margin_agreement(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """Boundary infimum formula against 1 / sup of the closed-loop norm."""
    worst = 0.0
    for _ in range(count):
        cf0 = _factorized(random_rational_plant(rng), instance)
        controller = bezout_controller(cf0)
        direct = margin_result(cf0, controller)
        if direct.stabilizes:
            worst = max(worst, abs(direct.value - margin_via_norm(cf0, controller)))
    return CheckResult("margin_agreement", worst <= 1e-7, worst, 1e-7, count)


def check_nu_oracle(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """Generic factorizations against normalized ones from spectral factorization."""
    worst = 0.0
    for _ in range(count):
        p1 = random_rational_plant(rng)
        p2 = perturb_plant(rng, p1, 0.1)
        generic = d_cr(p1, p2, instance).value
        normalized = d_nu(normalized_cf_rational(p1, instance), normalized_cf_rational(p2, instance), instance).value
        worst = max(worst, abs(generic - normalized))
    return CheckResult("nu_oracle", worst <= 1e-7, worst, 1e-7, count)


def check_cf_invariance(instance: AlgebraInstance, rng: np.random.Generator, count: int) -> CheckResult:
    """Rescaling a factorization by a unit changes neither value nor branch."""
    worst = 0.0
    flips = 0
    domain = instance.domain
    for _ in range(count):
        p1 = random_rational_plant(rng)
        cf1 = _factorized(p1, instance)
        cf2 = _factorized(perturb_plant(rng, p1, 0.1), instance)
        unit: StableElement = random_unit(rng, domain)
        before = d_cr(cf1, cf2, instance)
        after = d_cr(unit_rescale(cf1, unit), cf2, instance)
        worst = max(worst, abs(before.value - after.value))
        flips += int(before.branch is not after.branch)
    if flips:
        worst = math.inf
    return CheckResult("cf_invariance", flips == 0 and worst <= 1e-9, worst, 1e-9, count, {"branch_flips": flips})


def check_worked_example(instance: AlgebraInstance) -> CheckResult:
    """Closed-form distances and the nominal inverse margin of the delay example."""
    rows = example_distances(instance)
    worst = max(abs(row["d_cr"] - row["closed_form"]) for row in rows)
    nominal, controller = example_plants(instance)
    inverse = margin_result(
        coprime_factorize(nominal, instance), coprime_factorize(controller, instance)
    ).inverse
    low, high = EXAMPLE_MU_INVERSE_RANGE
    passed = worst <= EXAMPLE_TOLERANCE and low <= inverse <= high
    return CheckResult(
        "worked_example", passed, worst, EXAMPLE_TOLERANCE, len(rows), {"mu_inverse": inverse}
    )


def _guarded(name: str, threshold: float, count: int, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        return check()
    except NuChordError as error:
        logger.error("Self-test check raised", check=name, error=error.message, **error.details)
        return CheckResult(name, False, math.inf, threshold, count, {"error": error.message})


def run_selftest(config: Optional[AppConfig] = None, quick: bool = False, seed: Optional[int] = None) -> List[CheckResult]:
    """
    Run the whole invariant suite.

    Args:
        config: Application configuration (defaults when omitted)
        quick: Use reduced sample counts
        seed: Seed of the random families

    Returns:
        One CheckResult per check, in a fixed order
    """
    config = config or AppConfig()
    counts = QUICK_COUNTS if quick else FULL_COUNTS
    halfplane = config.instance(InstanceKind.HALFPLANE_C0AP)
    circle = config.instance(InstanceKind.CIRCLE)
    rng = default_rng(seed)

    plan: List[Tuple[str, float, int, Callable[[], CheckResult]]] = [
        ("metric_axioms", 1e-7, counts["metric_axioms"],
         lambda: check_metric_axioms(halfplane, rng, counts["metric_axioms"])),
        ("winding_oracle", 0.0, counts["winding_oracle"],
         lambda: check_winding_oracle(circle, rng, counts["winding_oracle"])),
        ("cross_term_identity", 1e-12, counts["cross_term_identity"],
         lambda: check_cross_term_identity(rng, counts["cross_term_identity"])),
        ("robust_bound", 1e-7, counts["robust_bound"],
         lambda: check_robust_bound(halfplane, rng, counts["robust_bound"])),
        ("margin_agreement", 1e-7, counts["margin_agreement"],
         lambda: check_margin_agreement(halfplane, rng, counts["margin_agreement"])),
        ("nu_oracle", 1e-7, counts["nu_oracle"],
         lambda: check_nu_oracle(halfplane, rng, counts["nu_oracle"])),
        ("cf_invariance", 1e-9, counts["cf_invariance"],
         lambda: check_cf_invariance(halfplane, rng, counts["cf_invariance"])),
        ("worked_example", EXAMPLE_TOLERANCE, len(EXAMPLE_PARAMETERS),
         lambda: check_worked_example(halfplane)),
    ]

    progress = CheckProgress("selftest", total=len(plan))
    results = []
    for name, threshold, count, check in plan:
        result = _guarded(name, threshold, count, check)
        results.append(result)
        logger.info(
            "Self-test check finished",
            check=name,
            passed=result.passed,
            worst_deviation=result.worst_deviation,
            count=result.count,
        )
        progress.advance(phase=name, failed=not result.passed)
    progress.complete()
    return results


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(result.passed for result in results)


