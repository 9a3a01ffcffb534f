"""
Index map and invertibility tests for the three algebra instances.

Circle: winding number of the boundary curve.
Half-plane C0+AP: (mean motion of the AP part, winding of 1 + f0/f_AP).
Annulus limit: winding on circles |z| = r for an ascending radii schedule.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .boundary_algebra import (
    Operand,
    BoundaryExpression,
    ap_values,
    as_expression,
    decompose_c0_ap,
    merge_ap_terms,
    sup_modulus_estimate,
)
from .exceptions import (
    APNotInvertible,
    CurveThroughZero,
    DomainMismatch,
    IndexNotStabilized,
    NoConvergence,
    NonResolvableWinding,
    NotInvertible,
    NotInvertibleOnCircle,
    VariantMismatch,
)
from .logging import get_logger
from .sampling import adaptive_extremum, boundary_grid, evaluate_parallel, uniform_thetas, wrap_theta
from .types import (
    AlgebraInstance,
    APTerm,
    BoundaryPoint,
    Domain,
    IndexValue,
    InstanceKind,
    InvertibilityReport,
    SampledCurve,
)

logger = get_logger({"component": "index"})

MIN_WINDING_SAMPLES = 16
# Largest phase step accepted without bisection.
PHASE_STEP_LIMIT = math.pi / 2
MEAN_MOTION_TOL = 1e-6
MEAN_MOTION_SCALES = (1, 2, 4)
W_AV_IDENTITY_TOL = 1e-6

Refiner = Callable[[np.ndarray], np.ndarray]


def _phase_steps(values: np.ndarray, following: np.ndarray) -> np.ndarray:
    return np.angle(following / values)


def winding_number(
    curve: SampledCurve,
    refine: Optional[Refiner] = None,
    threshold: float = 0.0,
    max_depth: int = 24,
) -> int:
    """
    Winding number about the origin of a closed sampled curve.

    Phase increments larger than pi/2 are bisected through `refine`, which
    re-evaluates the underlying function at new parameters, up to max_depth
    levels.

    Args:
        curve: Closed curve with at least 16 samples
        refine: Vectorized theta -> value callback for bisection
        threshold: Moduli at or below this count as passing through zero
        max_depth: Bisection budget

    Returns:
        Integer number of turns in increasing theta order

    Raises:
        CurveThroughZero: A sample lies within threshold of the origin
        NonResolvableWinding: A step of modulus >= pi survives the budget
    """
    if len(curve) < MIN_WINDING_SAMPLES:
        raise ValueError(f"winding number needs at least {MIN_WINDING_SAMPLES} samples")
    if not curve.closed:
        raise ValueError("winding number is defined for closed curves only")

    thetas = curve.thetas
    values = np.asarray(curve.values, dtype=complex)
    moduli = np.abs(values)
    if np.any(moduli <= threshold):
        j = int(np.argmin(moduli))
        raise CurveThroughZero(
            "curve passes through the origin",
            {"theta": float(thetas[j]), "modulus": float(moduli[j]), "threshold": threshold},
        )

    left_t = thetas
    right_t = np.concatenate([thetas[1:], [thetas[0] + 2.0 * math.pi]])
    left_v = values
    right_v = np.concatenate([values[1:], values[:1]])
    steps = _phase_steps(left_v, right_v)

    bad = np.abs(steps) > PHASE_STEP_LIMIT
    total = float(np.sum(steps[~bad]))
    left_t, right_t, left_v, right_v = left_t[bad], right_t[bad], left_v[bad], right_v[bad]

    depth = 0
    while left_t.size and refine is not None and depth < max_depth:
        mids = 0.5 * (left_t + right_t)
        mid_v = np.asarray(refine(wrap_theta(mids)), dtype=complex)
        if np.any(np.abs(mid_v) <= threshold):
            j = int(np.argmin(np.abs(mid_v)))
            raise CurveThroughZero(
                "curve passes through the origin",
                {"theta": float(wrap_theta(mids[j : j + 1])[0]), "modulus": float(abs(mid_v[j]))},
            )
        left_t = np.concatenate([left_t, mids])
        right_t = np.concatenate([mids, right_t])
        new_left_v = np.concatenate([left_v, mid_v])
        right_v = np.concatenate([mid_v, right_v])
        left_v = new_left_v
        steps = _phase_steps(left_v, right_v)
        bad = np.abs(steps) > PHASE_STEP_LIMIT
        total += float(np.sum(steps[~bad]))
        left_t, right_t, left_v, right_v = left_t[bad], right_t[bad], left_v[bad], right_v[bad]
        depth += 1

    if left_t.size:
        steps = _phase_steps(left_v, right_v)
        if np.any(np.abs(steps) >= math.pi - 1e-12):
            raise NonResolvableWinding(
                "phase step of pi or more after refinement",
                {"intervals": int(left_t.size), "depth": depth, "theta": float(left_t[0])},
            )
        total += float(np.sum(steps))

    turns = total / (2.0 * math.pi)
    winding = int(round(turns))
    logger.debug("Winding number computed", turns=turns, winding=winding, refinement_depth=depth)
    return winding


# --- invertibility ----------------------------------------------------------

def _ap_floor(expr: BoundaryExpression, instance: AlgebraInstance) -> Tuple[float, float]:
    """
    Window infimum of |f_AP| and the coefficient mass it is compared against.

    f_AP is the behaviour of f at +-infinity; f cannot be invertible in C0+AP
    unless f_AP is invertible in AP.
    """
    terms = merge_ap_terms(decompose_c0_ap(expr).ap_part)
    if not terms:
        return 0.0, 0.0
    mass = float(sum(abs(t.coeff) for t in terms))
    if len(terms) == 1:
        return abs(terms[0].coeff), mass
    delays = np.array([t.delay for t in terms])
    step = 0.25 / float(delays.max() - delays.min())
    window = instance.ap_window
    omegas = np.linspace(-window, window, int(math.ceil(2.0 * window / step)) + 1)
    return float(np.min(np.abs(ap_values(terms, omegas)))), mass


def is_invertible(expr: Operand, instance: AlgebraInstance) -> InvertibilityReport:
    """
    Numerical membership test for inv S.

    The infimum of |f| is compared with invertibility_tol * sup |f|. For the
    C0+AP instance the infimum is taken over the frequency window. With delays present,
    the almost-periodic part must also stay away from zero on that window.
    """
    expr = as_expression(expr, instance.domain)
    sup = sup_modulus_estimate(expr, instance, label="invertibility_sup")
    if sup.value == 0.0:
        return InvertibilityReport(False, 0.0, BoundaryPoint(sup.theta), 0.0, 0.0, False, sup.grid_size)
    if expr.domain is Domain.HALF_PLANE and expr.has_delays:
        ap_floor, mass = _ap_floor(expr, instance)
        ap_threshold = instance.tolerances.invertibility_tol * max(mass, sup.value)
        if ap_floor <= ap_threshold:
            logger.debug("Almost-periodic part not invertible", ap_min_modulus=ap_floor, threshold=ap_threshold)
            return InvertibilityReport(
                False, ap_floor, BoundaryPoint(math.pi), sup.value, ap_threshold, False, sup.grid_size
            )

    def modulus(thetas: np.ndarray) -> np.ndarray:
        return np.abs(expr.values(thetas))

    inf = adaptive_extremum(modulus, instance, mode="min", max_delay=expr.max_delay, label="invertibility_inf")
    threshold = instance.tolerances.invertibility_tol * sup.value
    min_modulus = max(inf.value, 0.0)
    invertible = min_modulus > threshold
    ambiguous = (0.5 * threshold < min_modulus <= 2.0 * threshold) or abs(min_modulus - threshold) <= inf.achieved_tol
    if ambiguous:
        logger.warning(
            "Invertibility decided close to the threshold",
            min_modulus=min_modulus,
            threshold=threshold,
            invertible=invertible,
        )
    return InvertibilityReport(
        invertible=invertible,
        min_modulus=min_modulus,
        witness_point=BoundaryPoint(inf.theta),
        sup_modulus=sup.value,
        threshold=threshold,
        ambiguous=ambiguous,
        grid_size=inf.grid_size,
    )


def _require_invertible(expr: BoundaryExpression, instance: AlgebraInstance) -> InvertibilityReport:
    report = is_invertible(expr, instance)
    if not report.invertible:
        raise NotInvertible(
            "expression is not invertible on the boundary",
            {"min_modulus": report.min_modulus, "theta": report.witness_point.theta},
        )
    return report


# --- circle -----------------------------------------------------------------

def index_circle(expr: Operand, instance: AlgebraInstance) -> IndexValue:
    """Winding number of the boundary curve on the unit circle."""
    expr = as_expression(expr, Domain.CIRCLE)
    if expr.domain is not Domain.CIRCLE:
        raise DomainMismatch("index_circle needs a circle expression")
    report = _require_invertible(expr, instance)
    thetas = uniform_thetas(instance.grid.initial_size)
    curve = SampledCurve(thetas, evaluate_parallel(expr.values, thetas))
    w = winding_number(curve, expr.values, 0.5 * report.min_modulus, instance.grid.refinement_depth)
    return IndexValue.integer(w)


# --- half-plane C0 + AP -----------------------------------------------------

@dataclass(frozen=True)
class MeanMotion:
    """Mean motion estimate with the agreement reached between window scales."""
    value: float
    tolerance: float
    window: float


def _unwrapped_phase(func: Refiner, omegas: np.ndarray, max_depth: int) -> Tuple[np.ndarray, np.ndarray]:
    """Continuous argument along an omega grid, inserting midpoints where steps exceed pi/2."""
    values = func(omegas)
    for _ in range(max_depth):
        steps = np.angle(values[1:] / values[:-1])
        bad = np.flatnonzero(np.abs(steps) > PHASE_STEP_LIMIT)
        if bad.size == 0:
            break
        mids = 0.5 * (omegas[bad] + omegas[bad + 1])
        omegas = np.insert(omegas, bad + 1, mids)
        values = np.insert(values, bad + 1, func(mids))
    steps = np.angle(values[1:] / values[:-1])
    if np.any(np.abs(steps) >= math.pi - 1e-12):
        raise NonResolvableWinding("argument of the AP part could not be unwrapped")
    phase = np.concatenate([[np.angle(values[0])], np.angle(values[0]) + np.cumsum(steps)])
    return omegas, phase


def estimate_mean_motion(ap_part: Sequence[APTerm], instance: AlgebraInstance) -> MeanMotion:
    """
    Mean motion lim (arg f(x) - arg f(-x)) / (2x) of a finite Dirichlet sum.

    Each estimate averages the slope over x in [X/2, X]; X runs over
    W, 2W, 4W until two successive estimates agree within 1e-6.

    Raises:
        APNotInvertible: The sum comes within tolerance of zero on the window
        NoConvergence: Successive window estimates keep disagreeing
    """
    terms = merge_ap_terms(ap_part)
    if not terms:
        raise APNotInvertible("almost-periodic part is identically zero")
    if len(terms) == 1:
        return MeanMotion(-terms[0].delay + 0.0, 0.0, math.inf)

    delays = np.array([t.delay for t in terms])
    spread = float(delays.max() - delays.min())
    shift = float(delays.min())
    size_scale = float(sum(abs(t.coeff) for t in terms))
    step = 0.25 / spread

    # Only delay differences make the phase oscillate; the common shift is linear.
    shifted = tuple(APTerm(t.coeff, t.delay - shift) for t in terms)

    def func(omegas: np.ndarray) -> np.ndarray:
        return ap_values(shifted, omegas)

    window = instance.ap_window
    estimates: List[float] = []
    for factor in MEAN_MOTION_SCALES:
        half_width = factor * window
        count = int(math.ceil(2.0 * half_width / step)) + 1
        omegas = np.linspace(-half_width, half_width, count)
        omegas, phase = _unwrapped_phase(func, omegas, instance.grid.refinement_depth)
        if factor == MEAN_MOTION_SCALES[0]:
            floor = float(np.min(np.abs(func(omegas))))
            if floor <= instance.tolerances.invertibility_tol * size_scale:
                raise APNotInvertible(
                    "almost-periodic part is not invertible on the window",
                    {"min_modulus": floor, "window": window},
                )
        xs = omegas[(omegas >= 0.5 * half_width) & (omegas <= half_width)]
        slopes = (np.interp(xs, omegas, phase) - np.interp(-xs, omegas, phase)) / (2.0 * xs)
        estimate = float(np.mean(slopes)) - shift
        logger.log_refinement("mean_motion", int(omegas.size), estimate, abs(estimate - estimates[-1]) if estimates else None)
        if estimates and abs(estimate - estimates[-1]) <= MEAN_MOTION_TOL:
            return MeanMotion(estimate, abs(estimate - estimates[-1]), half_width)
        estimates.append(estimate)

    raise NoConvergence(
        "mean motion estimates did not settle",
        {"estimates": estimates, "window": window},
    )


def mean_motion(ap_part: Sequence[APTerm], instance: AlgebraInstance) -> float:
    """Average winding of a finite Dirichlet sum (see estimate_mean_motion)."""
    return estimate_mean_motion(ap_part, instance).value


def index_c0ap(elem: Operand, instance: AlgebraInstance) -> IndexValue:
    """
    Index (w_av(f_AP), w(1 + f0/f_AP)) of an invertible half-plane function.

    The curve 1 + f0/f_AP tends to 1 at +-infinity and is closed through the
    point at infinity with that value. The integer component is counted from
    omega = +inf down to omega = -inf, the orientation the unit circle induces
    on the axis under s = (1+z)/(1-z), so zeros in the open right half-plane
    count positively.
    """
    expr = as_expression(elem, Domain.HALF_PLANE)
    if expr.domain is not Domain.HALF_PLANE:
        raise DomainMismatch("index_c0ap needs a half-plane expression")

    decomposition = decompose_c0_ap(expr)
    ap_part = decomposition.ap_part
    motion = estimate_mean_motion(ap_part, instance)
    _require_invertible(expr, instance)
    c0 = decomposition.c0_part

    def ratio(thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        out = np.ones(thetas.shape, dtype=complex)
        finite = thetas != math.pi
        if np.any(finite):
            finite_thetas = thetas[finite]
            omegas = np.tan(finite_thetas / 2.0)
            out[finite] = 1.0 + c0.values(finite_thetas) / ap_values(ap_part, omegas)
        return out

    thetas = boundary_grid(instance, instance.grid.initial_size, expr.max_delay)
    if thetas[-1] != math.pi:
        thetas = np.concatenate([thetas, [math.pi]])
    values = evaluate_parallel(ratio, thetas)
    edge = float(max(abs(values[0] - 1.0), abs(values[-2] - 1.0))) if expr.has_delays else 0.0
    if edge > 0.5:
        logger.warning("C0 part still large at the window edge", deviation=edge, window=instance.ap_window)

    curve = SampledCurve(thetas, values)
    threshold = instance.tolerances.invertibility_tol * float(np.max(np.abs(values)))
    w = -winding_number(curve, ratio, threshold, instance.grid.refinement_depth)
    index = IndexValue.real_integer(motion.value, w)
    logger.debug("C0+AP index computed", w_av=motion.value, w=w, mean_motion_tol=motion.tolerance)
    return index


# --- annulus limit ----------------------------------------------------------

def index_annulus_limit(elem: Operand, instance: AlgebraInstance) -> IndexValue:
    """
    Limit of winding numbers on circles |z| = r as r -> 1.

    Raises:
        NotInvertibleOnCircle: The function vanishes on one of the circles
        IndexNotStabilized: The last three windings disagree
    """
    expr = as_expression(elem, Domain.CIRCLE)
    if expr.domain is not Domain.CIRCLE:
        raise DomainMismatch("annulus index needs a disk expression")
    thetas = uniform_thetas(instance.grid.initial_size)
    windings = []
    for radius in instance.annulus_radii:
        def on_circle(t: np.ndarray, r: float = radius) -> np.ndarray:
            return expr.values(t, r)

        values = evaluate_parallel(on_circle, thetas)
        moduli = np.abs(values)
        threshold = instance.tolerances.invertibility_tol * float(moduli.max())
        if moduli.max() == 0.0 or moduli.min() <= threshold:
            raise NotInvertibleOnCircle(
                "function vanishes on a circle of the radii schedule",
                {"radius": radius, "min_modulus": float(moduli.min())},
            )
        try:
            w = winding_number(SampledCurve(thetas, values), on_circle, threshold, instance.grid.refinement_depth)
        except CurveThroughZero as error:
            raise NotInvertibleOnCircle(
                "function vanishes on a circle of the radii schedule",
                {"radius": radius, **error.details},
            )
        windings.append(w)
        logger.debug("Winding on circle", radius=radius, winding=w)

    tail = windings[-3:]
    if len(set(tail)) != 1:
        raise IndexNotStabilized(
            "windings on the outermost circles disagree",
            {"radii": list(instance.annulus_radii), "windings": windings},
        )
    return IndexValue.integer(tail[-1])


# --- dispatch ---------------------------------------------------------------

def index_of(expr: Operand, instance: AlgebraInstance) -> IndexValue:
    """Index of an invertible expression in the group of the given instance."""
    if instance.kind is InstanceKind.CIRCLE:
        return index_circle(expr, instance)
    if instance.kind is InstanceKind.HALFPLANE_C0AP:
        return index_c0ap(expr, instance)
    return index_annulus_limit(expr, instance)


def index_is_identity(idx: IndexValue, instance: AlgebraInstance) -> bool:
    """True for Integer(0), or RealInteger with |w_av| <= 1e-6 and w = 0."""
    expects_pair = instance.kind is InstanceKind.HALFPLANE_C0AP
    if idx.is_real_integer != expects_pair:
        raise VariantMismatch(
            "index value does not belong to the instance's group",
            {"instance": instance.kind.value, "index": idx.to_dict()},
        )
    if idx.w_av is None:
        return idx.w == 0
    return idx.w == 0 and abs(idx.w_av) <= W_AV_IDENTITY_TOL


def homotopy_invariant(
    f: Operand,
    g: Operand,
    instance: AlgebraInstance,
    ts: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
) -> bool:
    """
    Whether the index stays constant along f + t*g.

    With sup |g| < inf |f| every member of the family is invertible, so the
    index must not change.
    """
    base = as_expression(f, instance.domain)
    path = as_expression(g, instance.domain)
    indices = [index_of(base + path * complex(t), instance) for t in ts]
    logger.debug("Homotopy indices", indices=[i.to_dict() for i in indices])
    return all(same_index(i, indices[0]) for i in indices[1:])


def same_index(a: IndexValue, b: IndexValue) -> bool:
    """Equality in G, with the real component compared to 1e-6."""
    if a.is_real_integer != b.is_real_integer or a.w != b.w:
        return False
    if a.w_av is None or b.w_av is None:
        return True
    return abs(a.w_av - b.w_av) <= W_AV_IDENTITY_TOL
