"""Tests for the seeded random families and the self-test suite."""

import math

import numpy as np
import pytest

from nuchord.boundary_algebra import StableElement, decompose_c0_ap
from nuchord.exceptions import InvalidElement, MissingWitness
from nuchord.factorization import CoprimeFactorization, coprime_factorize, verify_bezout
from nuchord.randomized import (
    bezout_controller,
    default_rng,
    expected_disk_winding,
    perturb_plant,
    random_delay_element,
    random_disk_rational,
    random_rational_plant,
    random_unit,
)
from nuchord.selftest import (
    FULL_COUNTS,
    QUICK_COUNTS,
    CheckResult,
    all_passed,
    certification_grid,
    check_cross_term_identity,
    check_metric_axioms,
    check_winding_oracle,
    closed_form_distance,
    count_certified,
    run_selftest,
)
from nuchord.stability import stabilizes
from nuchord.types import AppConfig, Domain, NumericsConfig

CHECK_ORDER = [
    "metric_axioms",
    "winding_oracle",
    "cross_term_identity",
    "robust_bound",
    "margin_agreement",
    "nu_oracle",
    "cf_invariance",
    "worked_example",
]


class TestRandomFamilies:
    def test_seeded_generators_repeat(self):
        first = random_rational_plant(default_rng(7))
        second = random_rational_plant(default_rng(7))
        np.testing.assert_array_equal(first.num, second.num)
        np.testing.assert_array_equal(first.den, second.den)

    def test_plants_avoid_the_axis(self, rng):
        for _ in range(20):
            plant = random_rational_plant(rng)
            for coeffs in (plant.num, plant.den):
                roots = np.polynomial.polynomial.polyroots(coeffs) if coeffs.size > 1 else np.zeros(0)
                assert np.all(np.abs(roots.real) >= 0.2 - 1e-6)
            assert plant.den.size >= plant.num.size

    def test_perturbation_keeps_degrees(self, rng):
        plant = random_rational_plant(rng)
        perturbed = perturb_plant(rng, plant, 0.05)
        assert perturbed.den.size == plant.den.size

    def test_disk_winding_oracle(self, rng):
        rational = random_disk_rational(rng)
        inside = int(np.sum(np.abs(rational.zeros()) < 1.0)) - int(np.sum(np.abs(rational.poles()) < 1.0))
        assert expected_disk_winding(rational) == inside

    @pytest.mark.parametrize("domain", [Domain.HALF_PLANE, Domain.CIRCLE])
    def test_units_are_biproper(self, rng, domain):
        unit = random_unit(rng, domain)
        rational = unit.combined_rational()
        assert rational.num_degree == rational.den_degree

    def test_delay_elements_split(self, rng):
        elem = random_delay_element(rng)
        assert elem.has_delays
        split = decompose_c0_ap(elem)
        omegas = np.linspace(-1e3, 1e3, 2001)
        assert split.reconstruction_error(elem, omegas) <= 1e-9

    def test_bezout_controller_stabilizes(self, rng, halfplane):
        cf = coprime_factorize(random_rational_plant(rng), halfplane)
        controller = bezout_controller(cf)
        assert verify_bezout(controller) <= 1e-8
        assert stabilizes(cf, controller)

    def test_bezout_controller_needs_witnesses(self, halfplane):
        one = coprime_factorize(random_rational_plant(default_rng()), halfplane)
        bare = CoprimeFactorization(one.n, one.d, halfplane)
        with pytest.raises(MissingWitness):
            bezout_controller(bare)

    def test_bezout_controller_needs_invertible_denominator(self, halfplane):
        one = StableElement.constant(1.0)
        cf = CoprimeFactorization(
            one, StableElement.rational([1.0], [2.0, 1.0]), halfplane, one, StableElement.constant(0.0)
        )
        with pytest.raises(InvalidElement):
            bezout_controller(cf)


class TestChecks:
    def test_cross_term_identity(self, rng):
        result = check_cross_term_identity(rng, 1000)
        assert result.passed
        assert result.worst_deviation <= 1e-12

    def test_winding_oracle(self, circle, rng):
        assert check_winding_oracle(circle, rng, 20).passed

    def test_metric_axioms(self, halfplane, rng):
        result = check_metric_axioms(halfplane, rng, 2)
        assert result.passed, result.details

    def test_counts_cover_every_random_check(self):
        assert set(QUICK_COUNTS) == set(FULL_COUNTS)
        assert all(QUICK_COUNTS[name] <= FULL_COUNTS[name] for name in FULL_COUNTS)

    def test_all_passed(self):
        ok = CheckResult("a", True, 0.0, 1e-9, 1)
        bad = CheckResult("b", False, math.inf, 1e-9, 1)
        assert all_passed([ok, ok])
        assert not all_passed([ok, bad])
        assert bad.to_dict()["passed"] is False


class TestWorkedExample:
    def test_closed_form(self):
        assert closed_form_distance(1.0) == 0.0
        assert closed_form_distance(1.2) == pytest.approx(0.0905357, abs=1e-7)
        assert closed_form_distance(0.5) == pytest.approx(0.316, abs=1e-3)

    def test_certification_grid(self):
        grid = certification_grid()
        assert grid.size == 50
        assert grid[0] == pytest.approx(2.0 / 3.0 + 0.01)
        assert grid[-1] == pytest.approx(1.49)

    @pytest.mark.slow
    def test_interval_is_certified(self, halfplane):
        grid = certification_grid(count=10)
        assert count_certified(halfplane, grid) == 10


@pytest.mark.slow
@pytest.mark.integration
def test_quick_selftest_passes():
    results = run_selftest(quick=True)
    assert [r.name for r in results] == CHECK_ORDER
    assert all_passed(results), [r.to_dict() for r in results if not r.passed]


@pytest.mark.slow
@pytest.mark.integration
def test_full_selftest_passes():
    results = run_selftest()
    assert [r.name for r in results] == CHECK_ORDER
    assert {r.name: r.count for r in results if r.name in FULL_COUNTS} == FULL_COUNTS
    assert all_passed(results), [r.to_dict() for r in results if not r.passed]


def test_failing_check_is_reported(monkeypatch):
    """A numerical failure inside a check becomes a failed result, not an exception."""
    from nuchord import selftest
    from nuchord.exceptions import NoConvergence

    def explode(*args, **kwargs):
        raise NoConvergence("grid budget exhausted")

    for name in ("check_metric_axioms", "check_robust_bound", "check_margin_agreement",
                 "check_nu_oracle", "check_cf_invariance", "check_worked_example"):
        monkeypatch.setattr(selftest, name, explode)
    config = AppConfig(numerics=NumericsConfig(initial_grid=256))
    results = run_selftest(config, quick=True)
    assert [r.name for r in results] == CHECK_ORDER
    failed = {r.name for r in results if not r.passed}
    assert "metric_axioms" in failed and "worked_example" in failed
    assert results[2].passed
    assert results[0].details == {"error": "grid budget exhausted"}
