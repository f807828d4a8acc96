import math
from fractions import Fraction

import pytest

from newtonheight.adaptation import adapt_coordinates
from newtonheight.errors import PreconditionError
from newtonheight.invariants import critical_exponents
from newtonheight.sublevel import (
    closed_form_product_measure,
    dyadic_grid,
    iosevich_sawyer_check,
    knapp_box,
    knapp_sequence,
    sublevel_fit,
    sublevel_measure,
    sublevel_measures,
)


def invariants_of(phi):
    adaptation = adapt_coordinates(phi)
    return critical_exponents(phi, adaptation), adaptation


def test_band_measure(parse):
    estimate = sublevel_measure(parse("x1"), 1.0, 0.1)
    assert estimate.method == "grid"
    assert estimate.measure == pytest.approx(0.4, rel=1e-3)
    assert 0 < estimate.standard_error < 1e-3


def test_measures_grow_with_threshold(parse):
    estimates = sublevel_measures(parse("x1^4+x2^2"), 0.5, dyadic_grid(-12, -2), grid=512)
    measures = [e.measure for e in estimates]
    assert measures == sorted(measures)
    assert measures[0] > 0


def test_monte_carlo_fallback(parse):
    phi = parse("x1^2+x2^2")
    estimate = sublevel_measure(phi, 0.5, 0.04, budget=100, mc_samples=2**18, seed=11)
    assert estimate.method == "monte-carlo"
    assert abs(estimate.measure - math.pi * 0.04) < 4 * estimate.standard_error
    again = sublevel_measure(phi, 0.5, 0.04, budget=100, mc_samples=2**18, seed=11)
    assert again == estimate


@pytest.mark.parametrize("k", [8, 12, 16])
def test_product_measure_matches_closed_form(parse, k):
    epsilon = 2.0**-k
    estimate = sublevel_measure(parse("x1^2*x2^2"), 1.0, epsilon)
    assert estimate.measure == pytest.approx(closed_form_product_measure(epsilon, 1.0), rel=0.02)


def test_thresholds_must_be_positive(parse):
    with pytest.raises(PreconditionError):
        sublevel_measures(parse("x1^2+x2^2"), 0.5, [0.1, 0.0])


def test_fit_needs_three_decades(parse):
    with pytest.raises(PreconditionError):
        sublevel_fit(parse("x1^4+x2^2"), 0.5, dyadic_grid(-8, -4))


@pytest.mark.slow
@pytest.mark.parametrize(
    "expression, h",
    [("x1^2+x2^2", "1"), ("x1^4+x2^2", "4/3"), ("x1^3+x2^3", "3/2"), ("(x2-x1^2)^2+x1^5", "10/7")],
)
def test_sublevel_growth_rate(parse, expression, h):
    fit = sublevel_fit(parse(expression), 0.5, dyadic_grid(-20, -4))
    assert fit.within(1 / Fraction(h), 0.03)


@pytest.mark.slow
def test_sublevel_growth_rate_with_log(parse):
    fit = sublevel_fit(parse("x1^2*x2^2"), 0.5, dyadic_grid(-20, -4), log_power=1)
    assert 0.42 <= fit.slope <= 0.5
    assert fit.fixed_log_power == 1


def test_knapp_box_on_horizontal_edge(parse):
    report, adaptation = invariants_of(parse("(x2-x1^2)^4"))
    boxes, (c1, c2) = knapp_sequence(report, adaptation, "horizontal", [2.0**-k for k in range(4, 13)], samples=10_000)
    assert all(box.lower_bound_pc_prime == 8 for box in boxes)
    assert c1 == pytest.approx(1.0) and c2 == pytest.approx(1.0)
    assert boxes[0].half_width1 == 0.5
    assert boxes[0].to_dict()["jet"] == adaptation.jet.to_list()


def test_knapp_box_on_compact_edge(perturbed_parabola):
    report, adaptation = invariants_of(perturbed_parabola)
    box = knapp_box(report, adaptation, 1, 2.0**-10, samples=10_000)
    assert box.lower_bound_pc_prime == Fraction(32, 7)
    assert box.ratio == pytest.approx(2.0, rel=1e-9)
    assert box.half_width2 == pytest.approx(2.0**-5)


def test_knapp_box_on_principal_line(perturbed_parabola):
    report, adaptation = invariants_of(perturbed_parabola)
    boxes, _ = knapp_sequence(report, adaptation, "principal", [2.0**-k for k in (4, 8, 12, 16)], samples=10_000)
    assert boxes[0].lower_bound_pc_prime == Fraction(14, 3)
    for box in boxes:
        assert box.ratio == pytest.approx(1 + box.epsilon**0.25, rel=1e-9)
    ratios = [box.ratio for box in boxes]
    assert ratios == sorted(ratios, reverse=True)


@pytest.mark.parametrize(
    "expression, edge",
    [
        ("x1^4+x2^2", "principal"),
        ("(x2-x1^2)^2+x1^5", "horizontal"),
        ("(x2-x1^2)^3*(x2+x1^2)+x1^11", 1),
        ("(x2-x1^2)^2+x1^5", 7),
    ],
)
def test_knapp_box_preconditions(parse, expression, edge):
    report, adaptation = invariants_of(parse(expression))
    with pytest.raises(PreconditionError):
        knapp_box(report, adaptation, edge, 2.0**-8, samples=100)


@pytest.mark.parametrize(
    "p, convergent, boundary",
    [("2", True, False), ("4/3", False, True), ("5/4", False, False)],
)
def test_integrability_prediction(parse, p, convergent, boundary):
    verdict = iosevich_sawyer_check(parse("x1^4+x2^2"), 0.5, p, dyadic_grid(-12, -4), grid=256)
    assert verdict.p == Fraction(p)
    assert verdict.predicted_convergent is convergent
    assert verdict.boundary is boundary
    assert verdict.numeric_trend in ("convergent", "divergent", "inconclusive")
    assert verdict.to_dict()["p"] == p


def test_integrability_needs_p_above_one(parse):
    with pytest.raises(PreconditionError):
        iosevich_sawyer_check(parse("x1^4+x2^2"), 0.5, 1, dyadic_grid(-12, -4), grid=64)


@pytest.mark.slow
@pytest.mark.parametrize("p, trend", [("2", "convergent"), ("5/4", "divergent")])
def test_integrability_trend(parse, p, trend):
    verdict = iosevich_sawyer_check(parse("x1^4+x2^2"), 0.5, p, dyadic_grid(-20, -4), h=Fraction(4, 3))
    assert verdict.numeric_trend == trend
    assert len(verdict.shell_terms) == 16


@pytest.mark.parametrize("expression", ["(x2-x1^2)^2+x1^5", "(x2-x1^2)^4", "(x2-x1^2)^3*(x2+x1^2)+x1^11"])
def test_knapp_bounds_reach_restriction_exponent(parse, expression):
    report, adaptation = invariants_of(parse(expression))
    edges = ["principal"] + [e.index for e in report.edge_invariants if e.h is not None]
    bounds = [knapp_box(report, adaptation, edge, 2.0**-8, samples=100).lower_bound_pc_prime for edge in edges]
    assert max(bounds) == report.restriction_pc_prime


def test_knapp_box_follows_analytic_branch(parse):
    report, adaptation = invariants_of(parse("(x2-(x1+x2)^2)^4"))
    assert adaptation.branch is not None
    boxes, (c1, c2) = knapp_sequence(report, adaptation, "horizontal", [2.0**-k for k in range(4, 13)], samples=10_000)
    assert all(box.lower_bound_pc_prime == 8 for box in boxes)
    assert boxes[0].half_width1 <= 0.25
    assert 1 <= c1 and c2 <= 20


@pytest.mark.parametrize("expression", ["(x2-x1^2)^2+x1^5", "(x2-x1^2)^4", "(x2-x1^2)^3*(x2+x1^2)+x1^11"])
def test_knapp_ratio_stays_bounded(parse, expression):
    report, adaptation = invariants_of(parse(expression))
    edges = ["principal"] + [e.index for e in report.edge_invariants if e.h is not None]
    eps_grid = [2.0**-k for k in range(4, 21)]
    for edge in edges:
        boxes, (c1, c2) = knapp_sequence(report, adaptation, edge, eps_grid, samples=10_000)
        assert len(boxes) == 17
        assert 0 < c1 <= c2 <= 4 * c1
