"""
Seeded random families of plants, units and ring elements.

All generators take a numpy Generator so that property suites are
reproducible. Roots are kept away from the boundary of the stability region
so that the sampled quantities are well conditioned.
"""

import math
from typing import List, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .boundary_algebra import Rational, StableElement
from .exceptions import FactorizationError, InvalidElement, MissingWitness
from .factorization import CoprimeFactorization, Fraction
from .types import Domain

DEFAULT_SEED = 20240607
MIN_AXIS_DISTANCE = 0.2


def default_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED if seed is None else seed)


def _halfplane_roots(rng: np.random.Generator, degree: int, stable_only: bool = False) -> List[complex]:
    """Real roots and conjugate pairs with |Re| >= MIN_AXIS_DISTANCE."""
    roots: List[complex] = []
    while len(roots) < degree:
        sign = -1.0 if stable_only or rng.random() < 0.5 else 1.0
        real = sign * rng.uniform(MIN_AXIS_DISTANCE, 3.0)
        if degree - len(roots) >= 2 and rng.random() < 0.4:
            imag = rng.uniform(0.2, 2.0)
            roots += [complex(real, imag), complex(real, -imag)]
        else:
            roots.append(complex(real, 0.0))
    return roots


def _disk_roots(rng: np.random.Generator, count: int, inside: bool) -> List[complex]:
    """Roots with modulus in [0.2, 0.8] (inside) or [1.25, 2.5] (outside)."""
    roots: List[complex] = []
    while len(roots) < count:
        radius = rng.uniform(0.2, 0.8) if inside else rng.uniform(1.25, 2.5)
        if count - len(roots) >= 2 and rng.random() < 0.5:
            angle = rng.uniform(0.1, math.pi - 0.1)
            root = radius * complex(math.cos(angle), math.sin(angle))
            roots += [root, root.conjugate()]
        else:
            roots.append(complex(radius if rng.random() < 0.5 else -radius, 0.0))
    return roots


def _poly(roots: List[complex], gain: float = 1.0) -> np.ndarray:
    if not roots:
        return np.array([gain])
    return gain * P.polyfromroots(roots).real


def random_rational_plant(
    rng: np.random.Generator,
    max_degree: int = 4,
    proper: bool = True,
) -> Fraction:
    """
    Random rational half-plane plant without poles or zeros on the imaginary axis.

    The plant may be unstable and may have right half-plane zeros.
    """
    den_degree = int(rng.integers(1, max_degree + 1))
    num_limit = den_degree if proper else max_degree
    num_degree = int(rng.integers(0, num_limit + 1))
    gain = rng.uniform(0.5, 2.0) * (1.0 if rng.random() < 0.5 else -1.0)
    num = _poly(_halfplane_roots(rng, num_degree), gain)
    den = _poly(_halfplane_roots(rng, den_degree))
    return Fraction.rational(num, den)


def perturb_plant(rng: np.random.Generator, p: Fraction, scale: float = 0.05) -> Fraction:
    """Multiply every coefficient by 1 + scale * N(0, 1)."""
    if not p.is_rational:
        raise FactorizationError("only rational plants can be perturbed coefficient-wise")
    num = p.num * (1.0 + scale * rng.standard_normal(p.num.size))
    den = p.den * (1.0 + scale * rng.standard_normal(p.den.size))
    return Fraction.rational(num, den)


def random_disk_rational(rng: np.random.Generator, max_count: int = 3) -> Rational:
    """
    Random real rational function of z with no zeros or poles near |z| = 1.

    Returns:
        Rational whose winding number on the unit circle is the number of
        zeros minus the number of poles inside the disk
    """
    zeros = _disk_roots(rng, int(rng.integers(0, max_count + 1)), inside=True)
    zeros += _disk_roots(rng, int(rng.integers(0, max_count + 1)), inside=False)
    poles = _disk_roots(rng, int(rng.integers(0, max_count + 1)), inside=True)
    poles += _disk_roots(rng, int(rng.integers(0, max_count + 1)), inside=False)
    gain = rng.uniform(0.5, 2.0)
    return Rational(_poly(zeros, gain), _poly(poles))


def expected_disk_winding(rational: Rational) -> int:
    """Zeros minus poles inside the unit disk, from companion-matrix roots."""
    inside_zeros = int(np.sum(np.abs(rational.zeros()) < 1.0))
    inside_poles = int(np.sum(np.abs(rational.poles()) < 1.0))
    return inside_zeros - inside_poles


def random_unit(
    rng: np.random.Generator,
    domain: Domain = Domain.HALF_PLANE,
    max_degree: int = 2,
) -> StableElement:
    """
    Random biproper unit of the stable ring.

    Half-plane: c * prod (s + a_i)/(s + b_i) with a_i, b_i > 0.
    Circle: c * prod (z - a_i)/(z - b_i) with |a_i|, |b_i| > 1.
    """
    degree = int(rng.integers(0, max_degree + 1))
    gain = rng.uniform(0.5, 2.0) * (1.0 if rng.random() < 0.5 else -1.0)
    if domain is Domain.HALF_PLANE:
        zeros = [-rng.uniform(0.3, 3.0) for _ in range(degree)]
        poles = [-rng.uniform(0.3, 3.0) for _ in range(degree)]
    else:
        zeros = [rng.choice([-1.0, 1.0]) * rng.uniform(1.3, 3.0) for _ in range(degree)]
        poles = [rng.choice([-1.0, 1.0]) * rng.uniform(1.3, 3.0) for _ in range(degree)]
    return StableElement.rational(_poly(zeros, gain), _poly(poles), domain)


def random_delay_element(rng: np.random.Generator, max_delays: int = 3) -> StableElement:
    """c0 + sum c_k (s + b_k)/(s + a_k) exp(-t_k s) with up to max_delays delays."""
    count = int(rng.integers(1, max_delays + 1))
    delays = np.sort(rng.choice(np.arange(1, 21), size=count, replace=False) / 10.0)
    terms = [([rng.uniform(-2.0, 2.0)], [1.0], 0.0)]
    for delay in delays:
        coeff = rng.uniform(-1.0, 1.0)
        a = rng.uniform(0.5, 3.0)
        if rng.random() < 0.5:
            terms.append(([coeff * rng.uniform(0.0, 2.0), coeff], [a, 1.0], float(delay)))
        else:
            terms.append(([coeff], [a, 1.0], float(delay)))
    return StableElement.from_terms(terms, Domain.HALF_PLANE)


def bezout_controller(cf: CoprimeFactorization) -> CoprimeFactorization:
    """
    The controller c = -x/y built from the Bezout witnesses of cf.

    Its factorization is n_c = -x, d_c = y with witnesses (-n, d), so that
    n_p n_c - d_p d_c = -1 and c stabilizes the plant.

    Raises:
        MissingWitness: cf carries no witnesses
        InvalidElement: the witness y vanishes identically, so -x/y has no denominator
    """
    if cf.x is None or cf.y is None:
        raise MissingWitness("a Bezout controller needs the witnesses of the plant factorization")
    if cf.y.is_zero:
        raise InvalidElement("Bezout witness y is zero; -x/y is not a controller")
    return CoprimeFactorization(-cf.x, cf.y, cf.instance, -cf.n, cf.d)
