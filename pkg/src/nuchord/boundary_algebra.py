"""
Boundary algebra: elements of the stable ring and their boundary values.

A StableElement is a finite sum of real-rational terms, each optionally
multiplied by a delay factor exp(-s*t). Products and sums with conjugated
factors (the involution f -> f*) leave the ring, so they are represented as
BoundaryExpression objects: sums of terms

    coeff * plain(x) * conj(conjugated(x)) * exp(-x * delay)

evaluated at the boundary variable x (x = i*omega on the imaginary axis,
x = r*exp(i*theta) on circles). Both kinds evaluate on theta grids, so the
index and metric modules never need to know which one they hold.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import (
    DomainMismatch,
    EvaluationAtInfinityUndefined,
    GridMismatch,
    InvalidElement,
)
from .logging import get_logger
from .sampling import Extremum, adaptive_extremum
from .types import (
    AlgebraInstance,
    APTerm,
    BoundaryPoint,
    Domain,
    PointwiseOp,
    SampledCurve,
)

logger = get_logger({"component": "boundary_algebra"})

Scalar = Union[int, float, complex]

# Relative size below which merged Dirichlet coefficients are dropped.
_AP_PRUNE_TOL = 1e-14
# Delays closer than this are treated as the same frequency.
_DELAY_DECIMALS = 12


def _trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop exactly-zero high-order coefficients, keeping at least one entry."""
    nonzero = np.flatnonzero(coeffs)
    if nonzero.size == 0:
        return np.zeros(1, dtype=coeffs.dtype)
    return coeffs[: nonzero[-1] + 1]


def _as_coeffs(values: Union[Sequence[Scalar], np.ndarray]) -> np.ndarray:
    coeffs = np.atleast_1d(np.asarray(values))
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise InvalidElement("coefficient list must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(coeffs)):
        raise InvalidElement("coefficients must be finite", {"coeffs": coeffs.tolist()})
    dtype = complex if np.iscomplexobj(coeffs) else float
    return _trim(coeffs.astype(dtype))


@dataclass(frozen=True, eq=False)
class Rational:
    """
    Quotient of two polynomials with ascending coefficient arrays.

    Evaluation switches to the reversed polynomials for |x| > 1 so large
    frequencies do not overflow or cancel.
    """
    num: np.ndarray
    den: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "num", _as_coeffs(self.num))
        object.__setattr__(self, "den", _as_coeffs(self.den))
        if not np.any(self.den):
            raise InvalidElement("denominator must be nonzero")

    @classmethod
    def constant(cls, value: Scalar) -> "Rational":
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def one(cls) -> "Rational":
        return cls.constant(1.0)

    @classmethod
    def zero(cls) -> "Rational":
        return cls.constant(0.0)

    @property
    def num_degree(self) -> int:
        return int(self.num.size - 1)

    @property
    def den_degree(self) -> int:
        return int(self.den.size - 1)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.num)

    @property
    def is_one(self) -> bool:
        return self.num.size == 1 and self.den.size == 1 and self.num[0] == self.den[0]

    @property
    def is_constant(self) -> bool:
        return self.is_zero or (self.num.size == 1 and self.den.size == 1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if self.is_zero:
            return np.zeros(x.shape, dtype=complex)
        if self.is_constant:
            return np.full(x.shape, self.num[0] / self.den[0], dtype=complex)
        out = np.empty(x.shape, dtype=complex)
        large = np.abs(x) > 1.0
        small = ~large
        if np.any(small):
            xs = x[small]
            out[small] = P.polyval(xs, self.num) / P.polyval(xs, self.den)
        if np.any(large):
            xl = x[large]
            inv = 1.0 / xl
            ratio = P.polyval(inv, self.num[::-1]) / P.polyval(inv, self.den[::-1])
            out[large] = ratio * xl ** (self.num_degree - self.den_degree)
        return out

    def limit_at_infinity(self) -> complex:
        """Ratio of leading coefficients when the degrees agree, 0 when strictly proper."""
        if self.is_zero or self.num_degree < self.den_degree:
            return 0j
        if self.num_degree > self.den_degree:
            raise InvalidElement(
                "improper rational has no finite limit at infinity",
                {"num_degree": self.num_degree, "den_degree": self.den_degree},
            )
        return complex(self.num[-1] / self.den[-1])

    def proper_remainder(self) -> "Rational":
        """This rational minus its limit at infinity (strictly proper)."""
        limit = self.limit_at_infinity()
        if limit == 0:
            return self
        dtype = np.result_type(self.num, self.den, complex if limit.imag else float)
        padded = np.zeros(self.den.size, dtype=dtype)
        padded[: self.num.size] = self.num
        limit_value = limit if limit.imag else limit.real
        remainder = (padded - limit_value * self.den)[:-1]
        if remainder.size == 0:
            return Rational.zero()
        return Rational(remainder, self.den)

    def zeros(self) -> np.ndarray:
        if self.num.size < 2:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.num)

    def poles(self) -> np.ndarray:
        if self.den.size < 2:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.den)

    def conj_coefficients(self) -> "Rational":
        return Rational(np.conj(self.num), np.conj(self.den))

    def reflected(self) -> "Rational":
        """The rational s -> r(-s) (used for para-Hermitian products)."""
        signs = (-1.0) ** np.arange(max(self.num.size, self.den.size))
        return Rational(self.num * signs[: self.num.size], self.den * signs[: self.den.size])

    def scaled(self, factor: Scalar) -> "Rational":
        return Rational(self.num * factor, self.den)

    def __mul__(self, other: "Rational") -> "Rational":
        if self.is_one:
            return other
        if other.is_one:
            return self
        return Rational(P.polymul(self.num, other.num), P.polymul(self.den, other.den))

    def __add__(self, other: "Rational") -> "Rational":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.den.size == other.den.size and np.array_equal(self.den, other.den):
            return Rational(P.polyadd(self.num, other.num), self.den)
        num = P.polyadd(P.polymul(self.num, other.den), P.polymul(other.num, self.den))
        return Rational(num, P.polymul(self.den, other.den))

    def __neg__(self) -> "Rational":
        return Rational(-self.num, self.den)

    def __sub__(self, other: "Rational") -> "Rational":
        return self + (-other)

    def __repr__(self) -> str:
        return f"Rational(num={self.num.tolist()}, den={self.den.tolist()})"


def boundary_variable(thetas: np.ndarray, domain: Domain, radius: float = 1.0) -> np.ndarray:
    """
    Map boundary parameters to the variable the rationals are evaluated at.

    Half-plane: x = i*tan(theta/2) (theta = pi must be handled by the caller).
    Circle: x = radius * exp(i*theta).
    """
    if domain is Domain.CIRCLE:
        return radius * np.exp(1j * thetas)
    return 1j * np.tan(thetas / 2.0)


@dataclass(frozen=True, eq=False)
class Term:
    """One summand coeff * plain * conj(conjugated) * exp(-x*delay) of an expression."""
    plain: Rational
    conjugated: Rational = field(default_factory=Rational.one)
    delay: float = 0.0
    coeff: complex = 1.0 + 0j

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0 or self.plain.is_zero or self.conjugated.is_zero

    def values(self, x: np.ndarray) -> np.ndarray:
        out = self.coeff * self.plain(x)
        if not self.conjugated.is_one:
            out = out * np.conj(self.conjugated(x))
        if self.delay != 0.0:
            out = out * np.exp(-x * self.delay)
        return out

    def limit_at_infinity(self) -> complex:
        return self.coeff * self.plain.limit_at_infinity() * np.conj(self.conjugated.limit_at_infinity())

    def conj(self) -> "Term":
        return Term(self.conjugated, self.plain, -self.delay, complex(np.conj(self.coeff)))

    def __mul__(self, other: "Term") -> "Term":
        return Term(
            self.plain * other.plain,
            self.conjugated * other.conjugated,
            self.delay + other.delay,
            self.coeff * other.coeff,
        )


def merge_ap_terms(terms: Iterable[APTerm]) -> Tuple[APTerm, ...]:
    """Group Dirichlet terms by delay, sum their coefficients and drop negligible ones."""
    grouped: dict[float, complex] = {}
    for term in terms:
        key = round(float(term.delay), _DELAY_DECIMALS) + 0.0
        grouped[key] = grouped.get(key, 0j) + complex(term.coeff)
    scale = max([1.0] + [abs(c) for c in grouped.values()])
    return tuple(
        APTerm(coeff, delay)
        for delay, coeff in sorted(grouped.items())
        if abs(coeff) > _AP_PRUNE_TOL * scale
    )


def ap_values(ap_part: Sequence[APTerm], omegas: np.ndarray) -> np.ndarray:
    """Evaluate sum_k c_k * exp(-i*omega*t_k)."""
    omegas = np.asarray(omegas, dtype=float)
    out = np.zeros(omegas.shape, dtype=complex)
    for term in ap_part:
        if term.delay == 0.0:
            out += term.coeff
        else:
            out += term.coeff * np.exp(-1j * omegas * term.delay)
    return out


@dataclass(frozen=True, eq=False)
class BoundaryExpression:
    """Pointwise expression built from ring elements, their conjugates and delays."""
    domain: Domain
    terms: Tuple[Term, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        kept = tuple(t for t in self.terms if not t.is_zero)
        object.__setattr__(self, "terms", kept or (Term(Rational.zero()),))

    @classmethod
    def constant(cls, value: Scalar, domain: Domain) -> "BoundaryExpression":
        return cls(domain, (Term(Rational.one(), coeff=complex(value)),))

    @property
    def max_delay(self) -> float:
        return max(abs(t.delay) for t in self.terms)

    @property
    def has_delays(self) -> bool:
        return self.max_delay > 0.0

    def _values_at(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=complex)
        for term in self.terms:
            out += term.values(x)
        return out

    def limit_at_infinity(self) -> complex:
        """Value at the point at infinity of the imaginary axis."""
        if self.domain is not Domain.HALF_PLANE:
            raise DomainMismatch("the point at infinity belongs to the half-plane boundary")
        for term in self.terms:
            if term.delay != 0.0:
                raise EvaluationAtInfinityUndefined(
                    "delayed terms have no limit at infinity",
                    {"delay": term.delay},
                )
        return complex(sum(t.limit_at_infinity() for t in self.terms))

    def values(self, thetas: np.ndarray, radius: float = 1.0) -> np.ndarray:
        """Boundary values at the given parameters (radius applies to circle domains)."""
        thetas = np.asarray(thetas, dtype=float)
        if self.domain is Domain.CIRCLE:
            return self._values_at(boundary_variable(thetas, self.domain, radius))
        at_infinity = thetas == math.pi
        if not np.any(at_infinity):
            return self._values_at(boundary_variable(thetas, self.domain))
        out = np.empty(thetas.shape, dtype=complex)
        out[at_infinity] = self.limit_at_infinity()
        finite = ~at_infinity
        out[finite] = self._values_at(boundary_variable(thetas[finite], self.domain))
        return out

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        return self.values(thetas)

    def conj(self) -> "BoundaryExpression":
        """The involution f -> f*, pointwise complex conjugation on the boundary."""
        return BoundaryExpression(self.domain, tuple(t.conj() for t in self.terms))

    def _coerce(self, other: "Operand") -> "BoundaryExpression":
        expr = as_expression(other, self.domain)
        if expr.domain is not self.domain:
            raise DomainMismatch(
                "cannot combine expressions on different domains",
                {"left": self.domain.value, "right": expr.domain.value},
            )
        return expr

    def __add__(self, other: "Operand") -> "BoundaryExpression":
        return BoundaryExpression(self.domain, self.terms + self._coerce(other).terms)

    __radd__ = __add__

    def __neg__(self) -> "BoundaryExpression":
        return BoundaryExpression(
            self.domain, tuple(Term(t.plain, t.conjugated, t.delay, -t.coeff) for t in self.terms)
        )

    def __sub__(self, other: "Operand") -> "BoundaryExpression":
        return self + (-self._coerce(other))

    def __rsub__(self, other: "Operand") -> "BoundaryExpression":
        return self._coerce(other) - self

    def __mul__(self, other: "Operand") -> "BoundaryExpression":
        right = self._coerce(other)
        return BoundaryExpression(self.domain, tuple(a * b for a in self.terms for b in right.terms))

    __rmul__ = __mul__

    def decompose(self) -> "C0APDecomposition":
        """
        Split into a part vanishing at infinity and a finite Dirichlet sum.

        Each factor is split as limit + strictly proper remainder; the product
        of the two limits is the AP coefficient at the term's delay and the
        three remaining cross products are strictly proper.
        """
        if self.domain is not Domain.HALF_PLANE:
            raise DomainMismatch("C0 + AP splitting only applies to half-plane expressions")
        c0_terms: List[Term] = []
        ap_terms: List[APTerm] = []
        for term in self.terms:
            l1 = term.plain.limit_at_infinity()
            l2 = complex(np.conj(term.conjugated.limit_at_infinity()))
            r1 = term.plain.proper_remainder()
            r2 = term.conjugated.proper_remainder()
            ap_terms.append(APTerm(term.coeff * l1 * l2, term.delay))
            c0_terms.append(Term(Rational.one(), r2, term.delay, term.coeff * l1))
            c0_terms.append(Term(r1, Rational.one(), term.delay, term.coeff * l2))
            c0_terms.append(Term(r1, r2, term.delay, term.coeff))
        return C0APDecomposition(BoundaryExpression(self.domain, tuple(c0_terms)), merge_ap_terms(ap_terms))


@dataclass(frozen=True, eq=False)
class DelayTerm:
    """A rational factor times exp(-s*delay)."""
    rational: Rational
    delay: float = 0.0


def _real_coeffs(coeffs: np.ndarray, what: str) -> np.ndarray:
    if not np.iscomplexobj(coeffs):
        return coeffs
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if np.max(np.abs(coeffs.imag)) > 1e-12 * scale:
        raise InvalidElement(f"{what} coefficients of a ring element must be real")
    return coeffs.real.copy()


@dataclass(frozen=True, eq=False)
class StableElement:
    """
    Element of the stable ring: real rationals plus finitely many delayed rationals.

    Half-plane terms must be bounded and analytic on the closed right half-plane
    (denominator roots with Re < 0, proper); circle terms must have no
    denominator roots in the closed unit disk and no delays.
    """
    domain: Domain
    terms: Tuple[DelayTerm, ...]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Domain(self.domain))
        if not self.terms:
            raise InvalidElement("a ring element needs at least one term")
        terms = []
        for term in self.terms:
            rational = Rational(
                _real_coeffs(term.rational.num, "numerator"),
                _real_coeffs(term.rational.den, "denominator"),
            )
            terms.append(DelayTerm(rational, float(term.delay)))
        terms.sort(key=lambda t: t.delay)
        merged: List[DelayTerm] = []
        for term in terms:
            if merged and merged[-1].delay == term.delay:
                merged[-1] = DelayTerm(merged[-1].rational + term.rational, term.delay)
            else:
                merged.append(term)
        terms = merged
        if terms[0].delay != 0.0:
            terms.insert(0, DelayTerm(Rational.zero(), 0.0))
        object.__setattr__(self, "terms", tuple(terms))
        if self.validate:
            for term in self.terms:
                self._check_term(term)

    def _check_term(self, term: DelayTerm) -> None:
        if not (math.isfinite(term.delay) and term.delay >= 0.0):
            raise InvalidElement("delays must be finite and nonnegative", {"delay": term.delay})
        poles = term.rational.poles()
        if self.domain is Domain.CIRCLE:
            if term.delay != 0.0:
                raise DomainMismatch("delays are a half-plane construct", {"delay": term.delay})
            if np.any(np.abs(poles) <= 1.0):
                raise InvalidElement(
                    "denominator has roots in the closed unit disk",
                    {"poles": [complex(p) for p in poles]},
                )
            return
        if term.rational.num_degree > term.rational.den_degree and not term.rational.is_zero:
            raise InvalidElement(
                "half-plane terms must be proper",
                {"num": term.rational.num.tolist(), "den": term.rational.den.tolist()},
            )
        if np.any(poles.real >= 0.0):
            raise InvalidElement(
                "denominator has roots in the closed right half-plane",
                {"poles": [complex(p) for p in poles]},
            )

    # --- constructors -------------------------------------------------------

    @classmethod
    def rational(
        cls,
        num: Sequence[float],
        den: Sequence[float] = (1.0,),
        domain: Domain = Domain.HALF_PLANE,
        delay: float = 0.0,
    ) -> "StableElement":
        return cls(domain, (DelayTerm(Rational(np.asarray(num), np.asarray(den)), delay),))

    @classmethod
    def constant(cls, value: float, domain: Domain = Domain.HALF_PLANE) -> "StableElement":
        return cls(domain, (DelayTerm(Rational.constant(float(value)), 0.0),))

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[Tuple[Sequence[float], Sequence[float], float]],
        domain: Domain = Domain.HALF_PLANE,
    ) -> "StableElement":
        """Build from (num, den, delay) triples."""
        return cls(
            domain,
            tuple(DelayTerm(Rational(np.asarray(n), np.asarray(d)), t) for n, d, t in terms),
        )

    @classmethod
    def monomial(cls, power: int) -> "StableElement":
        """z**power on the circle."""
        return cls.rational([0.0] * power + [1.0], [1.0], Domain.CIRCLE)

    # --- structure ----------------------------------------------------------

    @property
    def delays(self) -> Tuple[float, ...]:
        return tuple(t.delay for t in self.terms)

    @property
    def max_delay(self) -> float:
        return max(self.delays)

    @property
    def has_delays(self) -> bool:
        return self.max_delay > 0.0

    @property
    def is_zero(self) -> bool:
        return all(t.rational.is_zero for t in self.terms)

    def combined_rational(self) -> Rational:
        """Sum of the terms as one rational (zero-delay elements only)."""
        if self.has_delays:
            raise InvalidElement("element carries delays and is not rational")
        total = Rational.zero()
        for term in self.terms:
            total = total + term.rational
        return total

    @cached_property
    def expression(self) -> BoundaryExpression:
        return BoundaryExpression(
            self.domain,
            tuple(Term(t.rational, delay=t.delay) for t in self.terms),
        )

    def values(self, thetas: np.ndarray, radius: float = 1.0) -> np.ndarray:
        return self.expression.values(thetas, radius)

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        return self.values(thetas)

    def conj(self) -> BoundaryExpression:
        return self.expression.conj()

    # --- ring operations ----------------------------------------------------

    def _same_domain(self, other: "StableElement") -> None:
        if other.domain is not self.domain:
            raise DomainMismatch(
                "cannot combine elements on different domains",
                {"left": self.domain.value, "right": other.domain.value},
            )

    def __add__(self, other: "Operand") -> "Operand":
        if isinstance(other, (int, float)):
            other = StableElement.constant(other, self.domain)
        if isinstance(other, StableElement):
            self._same_domain(other)
            return StableElement(self.domain, self.terms + other.terms, validate=False)
        return self.expression + other

    __radd__ = __add__

    def __neg__(self) -> "StableElement":
        return StableElement(
            self.domain, tuple(DelayTerm(-t.rational, t.delay) for t in self.terms), validate=False
        )

    def __sub__(self, other: "Operand") -> "Operand":
        if isinstance(other, (int, float)):
            other = StableElement.constant(other, self.domain)
        return self + (-other)

    def __rsub__(self, other: "Operand") -> "Operand":
        return (-self) + other

    def __mul__(self, other: "Operand") -> "Operand":
        if isinstance(other, (int, float)):
            return StableElement(
                self.domain,
                tuple(DelayTerm(t.rational.scaled(float(other)), t.delay) for t in self.terms),
                validate=False,
            )
        if isinstance(other, StableElement):
            self._same_domain(other)
            products = tuple(
                DelayTerm(a.rational * b.rational, a.delay + b.delay)
                for a in self.terms
                for b in other.terms
            )
            return StableElement(self.domain, products, validate=False)
        return self.expression * other

    __rmul__ = __mul__

    def __repr__(self) -> str:
        parts = ", ".join(f"({t.rational!r}, delay={t.delay})" for t in self.terms)
        return f"StableElement({self.domain.value}: {parts})"


Operand = Union[StableElement, BoundaryExpression, int, float, complex]
Evaluable = Union[StableElement, BoundaryExpression]


def as_expression(value: Operand, domain: Domain) -> BoundaryExpression:
    """Lift ring elements and scalars to boundary expressions."""
    if isinstance(value, BoundaryExpression):
        return value
    if isinstance(value, StableElement):
        return value.expression
    if isinstance(value, (int, float, complex, np.number)):
        return BoundaryExpression.constant(complex(value), domain)
    raise TypeError(f"cannot interpret {type(value).__name__} as a boundary expression")


@dataclass(frozen=True, eq=False)
class C0APDecomposition:
    """
    Split f = f0 + f_AP of a half-plane function.

    Attributes:
        c0_part: Part tending to 0 at +-infinity on the axis
        ap_part: Finite Dirichlet sum, sorted by delay
    """
    c0_part: Evaluable
    ap_part: Tuple[APTerm, ...]

    def ap_values(self, omegas: np.ndarray) -> np.ndarray:
        return ap_values(self.ap_part, omegas)

    def reconstruction_error(self, elem: Evaluable, omegas: np.ndarray) -> float:
        """max |f - (c0 + ap)| over the given finite frequencies."""
        omegas = np.asarray(omegas, dtype=float)
        thetas = 2.0 * np.arctan(omegas)
        # the round trip through theta moves large omegas; use the moved ones everywhere
        omegas = np.tan(thetas / 2.0)
        direct = elem.values(thetas)
        split = self.c0_part.values(thetas) + self.ap_values(omegas)
        return float(np.max(np.abs(direct - split)))


# --- element-level operations ----------------------------------------------

def evaluate(
    elem: Evaluable,
    point: BoundaryPoint,
    instance: Optional[AlgebraInstance] = None,
) -> complex:
    """
    Value of an element or expression at one boundary point.

    At theta = pi on a rational half-plane element this is the limit at
    infinity; delayed terms raise EvaluationAtInfinityUndefined there.
    """
    if instance is not None and instance.domain is not elem.domain:
        raise DomainMismatch(
            "element and instance live on different boundaries",
            {"element": elem.domain.value, "instance": instance.kind.value},
        )
    return complex(elem.values(np.array([point.theta]))[0])


def decompose_c0_ap(elem: Evaluable) -> C0APDecomposition:
    """Split a half-plane element into its C0 and almost-periodic parts."""
    if elem.domain is not Domain.HALF_PLANE:
        raise DomainMismatch("C0 + AP splitting only applies to half-plane elements")
    if isinstance(elem, BoundaryExpression):
        return elem.decompose()

    c0_terms = []
    ap_terms = []
    for term in elem.terms:
        ap_terms.append(APTerm(term.rational.limit_at_infinity(), term.delay))
        c0_terms.append(DelayTerm(term.rational.proper_remainder(), term.delay))
    return C0APDecomposition(
        StableElement(elem.domain, tuple(c0_terms), validate=False),
        merge_ap_terms(ap_terms),
    )


def sample(elem: Evaluable, grid: Union[Sequence[float], np.ndarray], radius: float = 1.0) -> SampledCurve:
    """Sample an element on a theta grid."""
    thetas = np.asarray(grid, dtype=float)
    return SampledCurve(thetas, elem.values(thetas, radius))


def pointwise(op: Union[PointwiseOp, str], *curves: SampledCurve) -> SampledCurve:
    """
    Elementwise operations on sampled curves sharing one grid.

    add and mul fold over all curves; conj and abs2 take exactly one.
    """
    op = PointwiseOp(op)
    if not curves:
        raise ValueError("pointwise needs at least one curve")
    base = curves[0]
    for curve in curves[1:]:
        if not np.array_equal(curve.thetas, base.thetas):
            raise GridMismatch(
                "pointwise operands must share a grid",
                {"sizes": [len(c) for c in curves]},
            )
    closed = all(c.closed for c in curves)

    if op in (PointwiseOp.CONJ, PointwiseOp.ABS2):
        if len(curves) != 1:
            raise ValueError(f"{op.value} takes exactly one curve")
        if op is PointwiseOp.CONJ:
            return SampledCurve(base.thetas, np.conj(base.values), closed)
        return SampledCurve(base.thetas, np.abs(base.values) ** 2, closed)

    values = np.array(base.values, dtype=complex)
    for curve in curves[1:]:
        if op is PointwiseOp.ADD:
            values = values + curve.values
        else:
            values = values * curve.values
    return SampledCurve(base.thetas, values, closed)


def sup_modulus_estimate(expr: Operand, instance: AlgebraInstance, label: str = "sup_modulus") -> Extremum:
    """Adaptive supremum of |expr| on the instance boundary, with grid details."""
    expr = as_expression(expr, instance.domain)
    if expr.domain is not instance.domain:
        raise DomainMismatch(
            "expression and instance live on different boundaries",
            {"expression": expr.domain.value, "instance": instance.kind.value},
        )

    def modulus(thetas: np.ndarray) -> np.ndarray:
        return np.abs(expr.values(thetas))

    return adaptive_extremum(modulus, instance, mode="max", max_delay=expr.max_delay, label=label)


def sup_modulus(expr: Operand, instance: AlgebraInstance) -> float:
    """
    Supremum norm of an element or expression on the instance boundary.

    Raises:
        NoConvergence: If the adaptive grid budget runs out
    """
    return sup_modulus_estimate(expr, instance).value


# --- conformal transport ---------------------------------------------------

def _mobius_substitute(rational: Rational, a: np.ndarray, b: np.ndarray) -> Rational:
    """Substitute x = a(y)/b(y) for linear a, b and clear denominators."""
    degree = max(rational.num_degree, rational.den_degree)

    def transform(coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(1)
        for j, c in enumerate(coeffs):
            out = P.polyadd(out, c * P.polymul(P.polypow(a, j), P.polypow(b, degree - j)))
        return out

    return Rational(transform(rational.num), transform(rational.den))


def halfplane_to_disk(elem: StableElement) -> StableElement:
    """
    Transplant a rational half-plane element to the disk via s = (1+z)/(1-z).

    The boundary point z = exp(i*theta) corresponds to s = i*cot(theta/2).
    """
    if elem.domain is not Domain.HALF_PLANE:
        raise DomainMismatch("expected a half-plane element")
    rational = elem.combined_rational()
    image = _mobius_substitute(rational, np.array([1.0, 1.0]), np.array([1.0, -1.0]))
    return StableElement(Domain.CIRCLE, (DelayTerm(image, 0.0),))


def disk_to_halfplane(elem: StableElement) -> StableElement:
    """Inverse transport z = (s-1)/(s+1)."""
    if elem.domain is not Domain.CIRCLE:
        raise DomainMismatch("expected a circle element")
    rational = elem.combined_rational()
    image = _mobius_substitute(rational, np.array([-1.0, 1.0]), np.array([1.0, 1.0]))
    return StableElement(Domain.HALF_PLANE, (DelayTerm(image, 0.0),))
