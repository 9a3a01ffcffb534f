"""
Coprime factorizations of plants over the stable ring.

Rational plants are factorized automatically; plants with delays must come
with an explicit factorization. Normalized factorizations of rational
half-plane plants are built by polynomial spectral factorization and serve
as an independent oracle for the metric.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg

from .boundary_algebra import BoundaryExpression, DelayTerm, Rational, StableElement, sup_modulus
from .exceptions import (
    DomainMismatch,
    FactorizationError,
    InvalidElement,
    MissingWitness,
    NotAUnit,
    NotCoprime,
    NotNormalized,
    SolveFailed,
    SpectralFactorizationFailed,
)
from .index import index_is_identity, index_of, is_invertible
from .logging import get_logger
from .sampling import adaptive_extremum
from .types import AlgebraInstance, Domain

logger = get_logger({"component": "factorization"})

BEZOUT_TOL = 1e-8
NORMALIZATION_TOL = 1e-8
SYLVESTER_COND = 1e-10
# Roots this close (relative) are treated as common factors.
COMMON_ROOT_TOL = 1e-6
IMAGINARY_AXIS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CoprimeFactorization:
    """
    A plant p = n/d with stable n, d and optional Bezout witnesses n*x + d*y = 1.

    Attributes:
        n: Numerator element
        d: Denominator element (nonzero)
        instance: Algebra instance the elements belong to
        x: Bezout witness for n
        y: Bezout witness for d
    """
    n: StableElement
    d: StableElement
    instance: AlgebraInstance
    x: Optional[StableElement] = None
    y: Optional[StableElement] = None

    def __post_init__(self) -> None:
        domain = self.instance.domain
        for name in ("n", "d", "x", "y"):
            element = getattr(self, name)
            if element is not None and element.domain is not domain:
                raise DomainMismatch(
                    f"{name} lives on a different boundary than the instance",
                    {"element": element.domain.value, "instance": self.instance.kind.value},
                )
        if self.d.is_zero:
            raise FactorizationError("denominator of a coprime factorization must be nonzero")
        if (self.x is None) != (self.y is None):
            raise FactorizationError("Bezout witnesses come in pairs")

    @property
    def has_witnesses(self) -> bool:
        return self.x is not None

    @property
    def max_delay(self) -> float:
        return max(self.n.max_delay, self.d.max_delay)

    def norm_squared(self) -> BoundaryExpression:
        """|n|^2 + |d|^2 as a boundary expression."""
        return self.n.conj() * self.n + self.d.conj() * self.d

    def norm_values(self, thetas: np.ndarray) -> np.ndarray:
        """sqrt(|n|^2 + |d|^2) on the boundary."""
        return np.sqrt(np.abs(self.n.values(thetas)) ** 2 + np.abs(self.d.values(thetas)) ** 2)

    def bezout_expression(self) -> BoundaryExpression:
        if self.x is None or self.y is None:
            raise MissingWitness("factorization carries no Bezout witnesses")
        return (self.n * self.x + self.d * self.y) - 1.0


@dataclass(frozen=True, eq=False)
class NormalizedCF(CoprimeFactorization):
    """Coprime factorization with |n|^2 + |d|^2 = 1 on the boundary, up to residual."""
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class Fraction:
    """
    A plant of the field of fractions: polynomial data or an explicit factorization.

    Polynomial coefficients are ascending in s (or z on the circle).
    """
    num: Optional[np.ndarray] = None
    den: Optional[np.ndarray] = None
    cf: Optional[CoprimeFactorization] = None

    def __post_init__(self) -> None:
        if self.cf is None:
            if self.num is None or self.den is None:
                raise FactorizationError("a fraction needs num/den or an explicit factorization")
            rational = Rational(np.asarray(self.num, dtype=float), np.asarray(self.den, dtype=float))
            object.__setattr__(self, "num", rational.num)
            object.__setattr__(self, "den", rational.den)

    @classmethod
    def rational(cls, num: Sequence[float], den: Sequence[float] = (1.0,)) -> "Fraction":
        return cls(np.asarray(num, dtype=float), np.asarray(den, dtype=float))

    @classmethod
    def from_cf(cls, cf: CoprimeFactorization) -> "Fraction":
        return cls(cf=cf)

    @property
    def is_rational(self) -> bool:
        return self.cf is None


@dataclass(frozen=True)
class FactorizationReport:
    """Numerical certificate of a factorization."""
    gap: float
    bezout_residual: Optional[float]


# --- polynomial helpers ------------------------------------------------------

def _from_roots(lead: float, roots: Sequence[complex]) -> np.ndarray:
    poly = lead * P.polyfromroots(roots) if len(roots) else np.array([lead])
    return np.real(poly).astype(float)


def cancel_common_roots(num: np.ndarray, den: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Remove root pairs shared by numerator and denominator."""
    num = Rational(num, [1.0]).num.real
    den = Rational(den, [1.0]).num.real
    if not np.any(num) or num.size < 2 or den.size < 2:
        return num, den
    num_roots = list(P.polyroots(num))
    den_roots = list(P.polyroots(den))
    cancelled = 0
    for root in list(num_roots):
        if not den_roots:
            break
        distances = [abs(root - r) for r in den_roots]
        j = int(np.argmin(distances))
        if distances[j] <= COMMON_ROOT_TOL * max(1.0, abs(root)):
            num_roots.remove(root)
            den_roots.pop(j)
            cancelled += 1
    if not cancelled:
        return num, den
    logger.debug("Cancelled common factors", count=cancelled)
    return _from_roots(num[-1], num_roots), _from_roots(den[-1], den_roots)


def solve_bezout_polynomials(
    a: np.ndarray,
    b: np.ndarray,
    target: np.ndarray,
    deg_x: int,
    deg_y: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve a*x + b*y = target for polynomials with deg x <= deg_x, deg y <= deg_y.

    The Sylvester-type system is solved by least squares with column pivoting;
    a numerical rank below the number of equations means a and b share a root.

    Raises:
        SolveFailed: The system is rank deficient
    """
    rows = max(a.size + deg_x, b.size + deg_y, target.size)
    matrix = np.zeros((rows, deg_x + deg_y + 2))
    for j in range(deg_x + 1):
        matrix[j : j + a.size, j] = a
    for j in range(deg_y + 1):
        matrix[j : j + b.size, deg_x + 1 + j] = b
    rhs = np.zeros(rows)
    rhs[: target.size] = target
    needed = min(rows, matrix.shape[1])

    solution, _, rank, _ = linalg.lstsq(matrix, rhs, cond=SYLVESTER_COND, lapack_driver="gelsy")
    if rank < needed:
        raise SolveFailed(
            "Sylvester system is numerically singular",
            {"rank": int(rank), "needed": int(needed), "deg_a": a.size - 1, "deg_b": b.size - 1},
        )
    return solution[: deg_x + 1], solution[deg_x + 1 :]


def _closed_region_roots(roots: np.ndarray, domain: Domain) -> np.ndarray:
    if domain is Domain.CIRCLE:
        return roots[np.abs(roots) <= 1.0 + 1e-9]
    return roots[roots.real >= -1e-9]


def _shared_root(n: StableElement, d: StableElement) -> Optional[complex]:
    """A common zero of two rational elements in the closed region, if any."""
    n_zeros = _closed_region_roots(n.combined_rational().zeros(), n.domain)
    d_zeros = _closed_region_roots(d.combined_rational().zeros(), d.domain)
    for root in n_zeros:
        if d_zeros.size and np.min(np.abs(d_zeros - root)) <= COMMON_ROOT_TOL * max(1.0, abs(root)):
            return complex(root)
    return None


# --- operations --------------------------------------------------------------

def verify_bezout(cf: CoprimeFactorization) -> float:
    """
    Residual sup |n*x + d*y - 1| on the boundary.

    Raises:
        MissingWitness: The factorization has no witnesses
    """
    return sup_modulus(cf.bezout_expression(), cf.instance)


def coprimeness_gap(n: StableElement, d: StableElement, instance: AlgebraInstance) -> float:
    """
    Infimum of sqrt(|n|^2 + |d|^2) on the boundary.

    For rational pairs a common zero inside the closed region also yields 0,
    since the boundary alone cannot see interior common zeros.
    """
    if n.domain is not d.domain or n.domain is not instance.domain:
        raise DomainMismatch("numerator, denominator and instance must share a boundary")
    if not (n.has_delays or d.has_delays) and not n.is_zero:
        root = _shared_root(n, d)
        if root is not None:
            logger.debug("Common zero in the closed region", root=str(root))
            return 0.0

    def norm(thetas: np.ndarray) -> np.ndarray:
        return np.sqrt(np.abs(n.values(thetas)) ** 2 + np.abs(d.values(thetas)) ** 2)

    max_delay = max(n.max_delay, d.max_delay)
    return max(adaptive_extremum(norm, instance, mode="min", max_delay=max_delay, label="gap").value, 0.0)


def validate_factorization(cf: CoprimeFactorization) -> FactorizationReport:
    """
    Check the coprimeness gap and, when present, the Bezout residual.

    Raises:
        NotCoprime: Gap below tolerance or residual above 1e-8
    """
    gap = coprimeness_gap(cf.n, cf.d, cf.instance)
    if gap <= cf.instance.tolerances.invertibility_tol:
        raise NotCoprime("numerator and denominator share a zero", {"gap": gap})
    residual = None
    if cf.has_witnesses:
        residual = verify_bezout(cf)
        if residual > BEZOUT_TOL:
            raise NotCoprime("Bezout identity does not hold", {"residual": residual})
    return FactorizationReport(gap, residual)


def _element(num: np.ndarray, den: np.ndarray, domain: Domain) -> StableElement:
    return StableElement(domain, (DelayTerm(Rational(num, den), 0.0),))


def _constant_cf(value: float, instance: AlgebraInstance) -> CoprimeFactorization:
    domain = instance.domain
    return CoprimeFactorization(
        StableElement.constant(value, domain),
        StableElement.constant(1.0, domain),
        instance,
        StableElement.constant(0.0, domain),
        StableElement.constant(1.0, domain),
    )


def coprime_factorize(p: Fraction, instance: AlgebraInstance) -> CoprimeFactorization:
    """
    Coprime factorization of a plant, with Bezout witnesses.

    Half-plane: n = N/(s+1)^k, d = D/(s+1)^k with witnesses from
    N*P + D*Q = (s+1)^(2k). Circle and annulus: n = N, d = D with witnesses
    from N*X + D*Y = 1.

    Raises:
        NotCoprime: Explicit factorization with a vanishing gap
        SolveFailed: Singular Sylvester system
    """
    if p.cf is not None:
        validate_factorization(p.cf)
        return p.cf

    num, den = cancel_common_roots(p.num, p.den)
    domain = instance.domain
    if not np.any(num):
        return _constant_cf(0.0, instance)
    if num.size == 1 and den.size == 1:
        return _constant_cf(float(num[0] / den[0]), instance)

    if domain is Domain.HALF_PLANE:
        k = max(num.size, den.size) - 1
        stable = P.polypow([1.0, 1.0], k)
        target = P.polypow([1.0, 1.0], 2 * k)
        x_poly, y_poly = solve_bezout_polynomials(num, den, target, k, k)
        cf = CoprimeFactorization(
            _element(num, stable, domain),
            _element(den, stable, domain),
            instance,
            _element(x_poly, stable, domain),
            _element(y_poly, stable, domain),
        )
    else:
        one = np.array([1.0])
        if den.size == 1:
            x_poly, y_poly = np.array([0.0]), one / den[0]
        elif num.size == 1:
            x_poly, y_poly = one / num[0], np.array([0.0])
        else:
            x_poly, y_poly = solve_bezout_polynomials(num, den, one, den.size - 2, num.size - 2)
        cf = CoprimeFactorization(
            _element(num, one, domain),
            _element(den, one, domain),
            instance,
            _element(x_poly, one, domain),
            _element(y_poly, one, domain),
        )

    residual = verify_bezout(cf)
    if residual > BEZOUT_TOL:
        raise NotCoprime("Bezout residual of the constructed witnesses is too large", {"residual": residual})
    logger.debug("Coprime factorization built", degree=max(num.size, den.size) - 1, residual=residual)
    return cf


def unit_rescale(cf: CoprimeFactorization, u: StableElement) -> CoprimeFactorization:
    """
    Rescale (n, d) by a unit u of the stable ring.

    Witnesses become (x/u, y/u) when u has no delays, since the inverse is
    then again a rational ring element.

    Raises:
        NotAUnit: u is not invertible or has a nonzero index
    """
    instance = cf.instance
    if u.domain is not instance.domain:
        raise DomainMismatch("unit lives on a different boundary than the factorization")
    report = is_invertible(u, instance)
    if not report.invertible:
        raise NotAUnit("rescaling factor vanishes on the boundary", {"min_modulus": report.min_modulus})
    index = index_of(u, instance)
    if not index_is_identity(index, instance):
        raise NotAUnit("rescaling factor has a nonzero index", {"index": index.to_dict()})

    n = u * cf.n
    d = u * cf.d
    x = y = None
    if cf.has_witnesses and not u.has_delays:
        combined = u.combined_rational()
        try:
            inverse = StableElement(u.domain, (DelayTerm(Rational(combined.den, combined.num), 0.0),))
            x = cf.x * inverse
            y = cf.y * inverse
        except InvalidElement as error:
            logger.warning("Inverse of the unit is not representable, dropping witnesses", error=str(error))
    return CoprimeFactorization(n, d, instance, x, y)


def normalized_cf_rational(p: Fraction, instance: AlgebraInstance) -> NormalizedCF:
    """
    Normalized coprime factorization of a rational half-plane plant.

    The spectral factor m is the stable polynomial with
    m(-s) m(s) = N(-s) N(s) + D(-s) D(s); then n = N/m and d = D/m.

    Raises:
        SpectralFactorizationFailed: Spectral density with roots near the axis
        NotNormalized: The residual check fails
    """
    if instance.domain is not Domain.HALF_PLANE:
        raise DomainMismatch("normalized factorizations are built on the half-plane")
    if not p.is_rational:
        raise FactorizationError("normalized factorizations need a rational plant")

    num, den = cancel_common_roots(p.num, p.den)
    domain = Domain.HALF_PLANE
    if not np.any(num):
        zero = StableElement.constant(0.0, domain)
        one = StableElement.constant(1.0, domain)
        return NormalizedCF(zero, one, instance, zero, one, residual=0.0)

    reflected_num = Rational(num, [1.0]).reflected().num
    reflected_den = Rational(den, [1.0]).reflected().num
    density = P.polyadd(P.polymul(reflected_num, num), P.polymul(reflected_den, den))
    density = Rational(density, [1.0]).num.real
    q = (density.size - 1) // 2
    lead = float(density[-1])
    if (density.size - 1) % 2 or math.copysign(1.0, lead) != (-1.0) ** q:
        raise SpectralFactorizationFailed("spectral density has an unexpected leading term", {"lead": lead})

    roots = P.polyroots(density) if density.size > 1 else np.zeros(0, dtype=complex)
    if np.any(np.abs(roots.real) <= IMAGINARY_AXIS_TOL):
        raise SpectralFactorizationFailed(
            "spectral density has roots on the imaginary axis",
            {"roots": [complex(r) for r in roots if abs(r.real) <= IMAGINARY_AXIS_TOL]},
        )
    stable_roots = roots[roots.real < 0]
    if stable_roots.size != q:
        raise SpectralFactorizationFailed(
            "roots do not split evenly between the half-planes",
            {"stable": int(stable_roots.size), "expected": q},
        )
    m = _from_roots(math.sqrt(abs(lead)), stable_roots)

    x_poly, y_poly = solve_bezout_polynomials(num, den, P.polymul(m, m), q, q)
    cf = NormalizedCF(
        _element(num, m, domain),
        _element(den, m, domain),
        instance,
        _element(x_poly, m, domain),
        _element(y_poly, m, domain),
    )
    residual = sup_modulus(cf.norm_squared() - 1.0, instance)
    if residual > NORMALIZATION_TOL:
        raise NotNormalized("spectral factor does not normalize the pair", {"residual": residual})
    logger.debug("Normalized factorization built", degree=q, residual=residual)
    return NormalizedCF(cf.n, cf.d, instance, cf.x, cf.y, residual=residual)
