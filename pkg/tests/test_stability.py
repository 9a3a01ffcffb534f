"""Tests for closed-loop stability, margins and robustness certificates."""

import math

import numpy as np
import pytest

from nuchord.exceptions import NotStabilizing, StabilityError
from nuchord.factorization import Fraction, coprime_factorize
from nuchord.randomized import bezout_controller, default_rng, random_rational_plant
from nuchord.selftest import EXAMPLE_MU_INVERSE_RANGE
from nuchord.stability import (
    ClosedLoopMatrix,
    certify_robust,
    certify_robust_report,
    margin,
    margin_result,
    margin_via_norm,
    robustness_radius,
    stabilizes,
)

ZERO = Fraction.rational([0.0])
UNSTABLE = Fraction.rational([1.0], [-1.0, 1.0])
# 1 - p*c = (s + 1)/(s - 1) for p = 1/(s - 1)
STABILIZING_GAIN = Fraction.rational([-2.0])


@pytest.fixture
def loop(halfplane):
    return coprime_factorize(UNSTABLE, halfplane), coprime_factorize(STABILIZING_GAIN, halfplane)


class TestStabilizes:
    def test_zero_pair(self, halfplane):
        zero = coprime_factorize(ZERO, halfplane)
        assert stabilizes(zero, zero)

    def test_unstable_plant_without_feedback(self, halfplane):
        assert not stabilizes(coprime_factorize(UNSTABLE, halfplane), coprime_factorize(ZERO, halfplane))

    def test_constant_gain(self, loop):
        assert stabilizes(*loop)

    def test_worked_example(self, halfplane, delay_example):
        nominal, controller, _ = delay_example
        assert stabilizes(nominal.cf, controller.cf)

    def test_instances_must_agree(self, halfplane, circle):
        with pytest.raises(StabilityError):
            stabilizes(coprime_factorize(ZERO, halfplane), coprime_factorize(ZERO, circle))


class TestMargin:
    def test_zero_pair_has_unit_margin(self, halfplane):
        zero = coprime_factorize(ZERO, halfplane)
        result = margin_result(zero, zero)
        assert result.value == pytest.approx(1.0)
        assert result.stabilizes

    def test_non_stabilizing_margin_is_zero(self, halfplane):
        result = margin_result(coprime_factorize(UNSTABLE, halfplane), coprime_factorize(ZERO, halfplane))
        assert result.value == 0.0
        assert not result.stabilizes
        assert math.isinf(result.inverse)

    def test_constant_gain_closed_form(self, loop):
        assert margin(*loop) == pytest.approx(1.0 / math.sqrt(10.0), abs=1e-9)

    def test_symmetric_in_plant_and_controller(self, loop):
        plant, controller = loop
        assert margin(plant, controller) == pytest.approx(margin(controller, plant), abs=1e-12)

    def test_agrees_with_closed_loop_norm(self, loop):
        assert margin_via_norm(*loop) == pytest.approx(margin(*loop), abs=1e-6)

    def test_large_closed_loop_norm(self, halfplane):
        # c = -(1 + eps) leaves the closed-loop pole at s = -eps
        eps = 1e-5
        gain = 1.0 + eps
        plant = coprime_factorize(UNSTABLE, halfplane)
        controller = coprime_factorize(Fraction.rational([-gain]), halfplane)
        expected = eps / math.sqrt(2.0 * (gain ** 2 + 1.0))
        assert margin(plant, controller) == pytest.approx(expected, abs=1e-9)
        assert margin_via_norm(plant, controller) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.slow
    def test_norm_route_on_random_bezout_loops(self, halfplane):
        rng = default_rng(7)
        for _ in range(150):
            cf = coprime_factorize(random_rational_plant(rng), halfplane)
            controller = bezout_controller(cf)
            assert margin_via_norm(cf, controller) == pytest.approx(margin(cf, controller), abs=1e-7)

    def test_norm_route_needs_stabilization(self, halfplane):
        with pytest.raises(NotStabilizing):
            margin_via_norm(coprime_factorize(UNSTABLE, halfplane), coprime_factorize(ZERO, halfplane))

    def test_worked_example(self, delay_example):
        nominal, controller, _ = delay_example
        result = margin_result(nominal.cf, controller.cf)
        low, high = EXAMPLE_MU_INVERSE_RANGE
        assert low <= result.inverse <= high

    @pytest.mark.slow
    def test_worked_example_norm_route(self, delay_example):
        nominal, controller, _ = delay_example
        assert margin_via_norm(nominal.cf, controller.cf) == pytest.approx(
            margin(nominal.cf, controller.cf), abs=1e-6
        )

    def test_robustness_radius(self, halfplane):
        assert robustness_radius(UNSTABLE, STABILIZING_GAIN, halfplane) == pytest.approx(
            1.0 / math.sqrt(10.0), abs=1e-9
        )


class TestClosedLoopMatrix:
    def test_rank_one_norm(self, loop):
        matrix = ClosedLoopMatrix(*loop)
        thetas = np.linspace(-3.0, 3.0, 9)
        singular = np.linalg.svd(matrix.entries(thetas), compute_uv=False)
        np.testing.assert_allclose(singular[:, 1], 0.0, atol=1e-12)
        np.testing.assert_allclose(matrix.operator_norms(thetas), singular[:, 0])

    def test_degenerate_loop(self, halfplane):
        one = coprime_factorize(Fraction.rational([1.0]), halfplane)
        with pytest.raises(StabilityError):
            ClosedLoopMatrix(one, one)


class TestCertificate:
    def test_small_perturbation_is_certified(self, halfplane, delay_example):
        nominal, controller, perturbed = delay_example
        certificate = certify_robust(nominal, controller, perturbed(1.2), halfplane)
        assert certificate.stabilized
        assert certificate.distance == pytest.approx(0.0905357, abs=1e-6)
        assert certificate.lower_bound == pytest.approx(certificate.mu_nominal - certificate.distance)

    def test_large_perturbation_is_not_certified(self, halfplane, delay_example):
        nominal, controller, perturbed = delay_example
        certificate = certify_robust(nominal, controller, perturbed(0.5), halfplane)
        assert certificate.lower_bound <= 0.0
        assert not certificate.stabilized

    def test_nominal_plant(self, halfplane, delay_example):
        nominal, controller, _ = delay_example
        certificate = certify_robust(nominal, controller, nominal, halfplane)
        assert certificate.distance == pytest.approx(0.0, abs=1e-9)
        assert certificate.lower_bound == pytest.approx(certificate.mu_nominal, abs=1e-9)

    def test_direct_margin_respects_the_bound(self, halfplane, delay_example):
        nominal, controller, perturbed = delay_example
        report = certify_robust_report(nominal, controller, perturbed(1.2), halfplane, direct_mu=True)
        certificate = report.certificate
        assert certificate.mu_perturbed is not None
        assert certificate.mu_perturbed >= certificate.lower_bound - 1e-7
        assert report.perturbed.stabilizes

    def test_rational_certificate(self, halfplane):
        perturbed = Fraction.rational([1.0], [-1.1, 1.0])
        certificate = certify_robust(UNSTABLE, STABILIZING_GAIN, perturbed, halfplane, direct_mu=True)
        assert certificate.stabilized
        assert certificate.to_dict()["mu_perturbed"] == certificate.mu_perturbed
