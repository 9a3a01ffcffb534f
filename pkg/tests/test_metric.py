"""Tests for the chordal metric and its normalized counterpart."""

import math

import numpy as np
import pytest

from nuchord.boundary_algebra import StableElement
from nuchord.exceptions import DomainMismatch, NotNormalized
from nuchord.factorization import CoprimeFactorization, Fraction, coprime_factorize, normalized_cf_rational
from nuchord.metric import cross_term_identity, d_cr, d_nu, index_condition, kappa, kappa_values
from nuchord.selftest import EXAMPLE_PARAMETERS, EXAMPLE_TOLERANCE, closed_form_distance
from nuchord.types import Branch

ZERO = Fraction.rational([0.0])
ONE = Fraction.rational([1.0])
UNSTABLE = Fraction.rational([1.0], [-1.0, 1.0])


def _constant_cf(n, d, instance):
    return CoprimeFactorization(StableElement.constant(n), StableElement.constant(d), instance)


class TestKappa:
    def test_zero_against_one(self, halfplane):
        cf0 = coprime_factorize(ZERO, halfplane)
        cf1 = coprime_factorize(ONE, halfplane)
        values = kappa_values(cf0, cf1, np.array([-1.0, 0.0, 1.0]))
        np.testing.assert_allclose(values, 1.0 / math.sqrt(2.0))

    def test_bounded_and_symmetric(self, halfplane, rng):
        cf1 = coprime_factorize(UNSTABLE, halfplane)
        cf2 = coprime_factorize(Fraction.rational([2.0, 1.0], [3.0, 1.0, 1.0]), halfplane)
        thetas = np.sort(rng.uniform(-math.pi, math.pi, 200))
        forward = kappa(cf1, cf2, thetas).values
        np.testing.assert_allclose(forward, kappa(cf2, cf1, thetas).values)
        assert np.all((forward >= 0.0) & (forward <= 1.0))

    def test_independent_of_the_factorization(self, halfplane):
        cf = coprime_factorize(UNSTABLE, halfplane)
        other = coprime_factorize(Fraction.rational([1.0], [1.0, 1.0]), halfplane)
        scaled = CoprimeFactorization(cf.n * 3.0, cf.d * 3.0, halfplane)
        thetas = np.linspace(-3.0, 3.0, 31)
        np.testing.assert_allclose(kappa_values(cf, other, thetas), kappa_values(scaled, other, thetas), atol=1e-14)


class TestIndexCondition:
    def test_holds_for_a_plant_against_itself(self, halfplane):
        cf = coprime_factorize(UNSTABLE, halfplane)
        condition = index_condition(cf, cf)
        assert condition.invertible and condition.holds
        assert condition.index.w == 0

    def test_vanishing_almost_periodic_part(self, halfplane):
        cf1 = CoprimeFactorization(
            StableElement.constant(1.0), StableElement.rational([1.0], [2.0, 1.0]), halfplane,
            StableElement.constant(1.0), StableElement.constant(0.0),
        )
        cf2 = CoprimeFactorization(
            StableElement.from_terms([([1.0], [1.0, 1.0], 1.0)]), StableElement.constant(1.0), halfplane,
            StableElement.constant(0.0), StableElement.constant(1.0),
        )
        condition = index_condition(cf1, cf2)
        assert not condition.invertible
        assert not condition.holds
        result = d_cr(cf1, cf2, halfplane)
        assert result.value == 1.0
        assert result.branch is Branch.INDEX_CONDITION_FAILED

    def test_unstable_pole_shifts_the_winding(self, halfplane):
        condition = index_condition(coprime_factorize(ZERO, halfplane), coprime_factorize(UNSTABLE, halfplane))
        assert condition.invertible
        assert not condition.holds
        assert condition.index.w == 1
        assert abs(condition.index.w_av) <= 1e-6


class TestChordalMetric:
    def test_same_plant(self, halfplane):
        result = d_cr(UNSTABLE, UNSTABLE, halfplane)
        assert result.value == pytest.approx(0.0, abs=1e-9)
        assert result.branch is Branch.KAPPA_SUP

    def test_zero_against_one(self, halfplane):
        assert d_cr(ZERO, ONE, halfplane).value == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-9)

    def test_index_condition_fails(self, halfplane):
        result = d_cr(ZERO, UNSTABLE, halfplane)
        assert result.value == 1.0
        assert result.branch is Branch.INDEX_CONDITION_FAILED
        assert result.condition.invertible
        assert not result.condition.holds

    def test_symmetry(self, halfplane):
        p1 = Fraction.rational([1.0], [1.0, 1.0])
        p2 = Fraction.rational([2.0], [3.0, 1.0])
        forward = d_cr(p1, p2, halfplane).value
        assert forward == pytest.approx(d_cr(p2, p1, halfplane).value, abs=1e-9)
        assert 0.0 < forward < 1.0

    def test_instance_taken_from_factorizations(self, halfplane):
        cf = coprime_factorize(UNSTABLE, halfplane)
        assert d_cr(cf, cf).value == pytest.approx(0.0, abs=1e-9)

    def test_instance_required_for_fractions(self):
        with pytest.raises(ValueError):
            d_cr(ZERO, ONE)

    def test_mixed_instances(self, halfplane, circle):
        cf_half = coprime_factorize(ONE, halfplane)
        cf_disk = coprime_factorize(ONE, circle)
        with pytest.raises(DomainMismatch):
            d_cr(cf_half, cf_disk)

    def test_disk_plants(self, circle):
        p = Fraction.rational([0.5, 1.0], [-0.25, 1.0])
        q = Fraction.rational([0.5, 1.0], [-0.3, 1.0])
        assert d_cr(p, p, circle).value == pytest.approx(0.0, abs=1e-9)
        assert 0.0 < d_cr(p, q, circle).value < 0.1

    @pytest.mark.slow
    @pytest.mark.parametrize("a", EXAMPLE_PARAMETERS)
    def test_delay_family_closed_form(self, halfplane, delay_example, a):
        nominal, _, perturbed = delay_example
        result = d_cr(nominal, perturbed(a), halfplane)
        assert result.branch is Branch.KAPPA_SUP
        assert result.value == pytest.approx(closed_form_distance(a), abs=EXAMPLE_TOLERANCE)

    def test_delay_family_at_one_point_two(self, halfplane, delay_example):
        nominal, _, perturbed = delay_example
        assert d_cr(nominal, perturbed(1.2), halfplane).value == pytest.approx(0.0905357, abs=1e-6)


class TestNormalizedMetric:
    def test_constant_pairs(self, halfplane):
        root = 1.0 / math.sqrt(2.0)
        result = d_nu(_constant_cf(0.0, 1.0, halfplane), _constant_cf(root, root, halfplane))
        assert result.value == pytest.approx(root, abs=1e-9)

    def test_unnormalized_rejected(self, halfplane):
        with pytest.raises(NotNormalized):
            d_nu(_constant_cf(0.0, 1.0, halfplane), _constant_cf(1.0, 1.0, halfplane))

    def test_agrees_with_chordal_metric(self, halfplane):
        p1 = Fraction.rational([1.0], [1.0, 1.0])
        p2 = Fraction.rational([1.0, 1.0], [-2.0, 0.0, 1.0])
        normalized = d_nu(normalized_cf_rational(p1, halfplane), normalized_cf_rational(p2, halfplane))
        assert normalized.value == pytest.approx(d_cr(p1, p2, halfplane).value, abs=1e-6)
        assert normalized.branch is d_cr(p1, p2, halfplane).branch


class TestCrossTermIdentity:
    def test_holds_pointwise(self, rng):
        a, b, alpha, beta = (rng.normal(size=50) + 1j * rng.normal(size=50) for _ in range(4))
        lhs, rhs = cross_term_identity(a, b, alpha, beta)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_orthogonal_pairs(self):
        lhs, rhs = cross_term_identity(np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))
        assert lhs[0] == pytest.approx(0.0)
        assert rhs[0] == pytest.approx(0.0)
