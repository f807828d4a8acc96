import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newtonheight.errors import PreconditionError, QuadratureBudgetError
from newtonheight.numerics import CompiledPhase, compensated_horner, greedy_panels, pairwise_sum
from newtonheight.oscillatory import (
    PRODUCT,
    CutoffSpec,
    OscillatoryResult,
    _fit_results,
    circle_harmonic,
    decay_fit,
    geometric_grid,
    log_doubling_ratio,
    oscillatory_integral,
    uniform_decay_probe,
    vdc_probe_1d,
)
from newtonheight.parser import parse_polynomial
from newtonheight.polynomial import BivariatePolynomial


def test_cutoff_shape():
    cutoff = CutoffSpec(0.5)
    assert cutoff(0.0, 0.0) == pytest.approx(1.0)
    assert cutoff(0.5, 0.0) == 0.0
    assert cutoff(0.3, 0.4) == 0.0
    assert 0 < cutoff(0.2, 0.1) < 1
    with pytest.raises(ValueError):
        CutoffSpec(0.0)


def test_compensated_horner_is_accurate_near_a_multiple_root():
    # (x - 1)^5 expanded; plain Horner loses about 15 digits near x = 1.
    coefficients = [1.0, -5.0, 10.0, -10.0, 5.0, -1.0]
    x = np.array([1.0 + 2.0**-10])
    value, correction = compensated_horner(coefficients, [0.0] * 6, x)
    assert (value + correction)[0] == pytest.approx(2.0**-50, rel=1e-6)


def test_compiled_phase_matches_exact_evaluation(perturbed_parabola):
    compiled = CompiledPhase(perturbed_parabola)
    x1 = np.array([[0.1], [-0.3]])
    x2 = np.array([[0.2, 0.05]])
    values = compiled(x1, x2)
    for i in range(2):
        for j in range(2):
            assert values[i, j] == pytest.approx(perturbed_parabola.evaluate((x1[i, 0], x2[0, j])), rel=1e-14)


def test_panels_resolve_the_local_period():
    edges = greedy_panels(-0.5, 0.5, lambda a, b: 2 * max(abs(a), abs(b)), 1000.0, 1.25, 16)
    widths = np.diff(edges)
    slopes = 2 * np.maximum(np.abs(edges[:-1]), np.abs(edges[1:]))
    assert edges[0] == -0.5 and edges[-1] == 0.5
    assert np.all(widths * slopes * 1000.0 * 1.25 <= 2 * math.pi * (1 + 1e-12))
    with pytest.raises(QuadratureBudgetError):
        greedy_panels(-0.5, 0.5, lambda a, b: 1.0, 1e6, 1.25, 16, limit=100)


def test_pairwise_sum_is_order_independent_for_a_fixed_shape():
    values = [1e16, 1.0, -1e16, 1.0]
    assert pairwise_sum(values) == pairwise_sum(list(values))
    assert pairwise_sum([]) == 0.0


def test_zero_phase_integrates_the_cutoff():
    cutoff = CutoffSpec(0.5)
    result = oscillatory_integral(BivariatePolynomial(), cutoff, 1.0, threads=1)
    assert result.value.real == pytest.approx(cutoff.mass(), rel=1e-5)
    assert abs(result.value.imag) < 1e-12


def test_negative_frequency_gives_the_conjugate(cutoff, parse):
    phi = parse("x1^2 + x2^4")
    forward = oscillatory_integral(phi, cutoff, 40.0, threads=1)
    backward = oscillatory_integral(phi, cutoff, -40.0, threads=1)
    assert backward.value == pytest.approx(forward.value.conjugate(), abs=1e-12)


def test_refinement_stays_within_the_error_estimate(cutoff, parse):
    phi = parse("x1^4 + x2^2")
    base = oscillatory_integral(phi, cutoff, 64.0, threads=1)
    finer = oscillatory_integral(phi, cutoff, 64.0, oversample=2.5, threads=1)
    assert abs(base.magnitude - finer.magnitude) <= max(base.estimated_error, 1e-12)
    assert set(base.to_row()) == {"lambda", "s1", "s2", "reI", "imI", "absI", "estErr"}


def test_threads_do_not_change_the_result(cutoff, parse):
    phi = parse("x1^2*x2^2 + x1^3")
    serial = oscillatory_integral(phi, cutoff, 100.0, threads=1)
    parallel = oscillatory_integral(phi, cutoff, 100.0, threads=4)
    assert serial.value == parallel.value


def test_preconditions(cutoff, parse):
    phi = parse("x1^4 + x2^2")
    with pytest.raises(PreconditionError):
        oscillatory_integral(phi, cutoff, 0.0)
    with pytest.raises(PreconditionError):
        oscillatory_integral(phi, CutoffSpec(1.5), 10.0)
    with pytest.raises(QuadratureBudgetError):
        oscillatory_integral(phi, cutoff, 1000.0, budget=1000)
    with pytest.raises(PreconditionError):
        decay_fit(phi, cutoff, [10.0, 20.0, 40.0])


def test_geometric_grid():
    assert geometric_grid(64, 8192) == [64.0 * 2**k for k in range(8)]


def test_van_der_corput_bound(cutoff):
    report = vdc_probe_1d([0, 0, 1], cutoff, 2, geometric_grid(64, 4096))
    assert report.bounded
    assert report.sup_ratio < 3

    cubic = vdc_probe_1d([0, 0, 1, 1], CutoffSpec(0.25), 2, geometric_grid(64, 4096))
    assert cubic.bounded


def test_van_der_corput_precondition(cutoff):
    with pytest.raises(PreconditionError) as excinfo:
        vdc_probe_1d([0, 0, 0, 1], cutoff, 2, geometric_grid(16, 256))
    assert "s=0.0" in str(excinfo.value)


def test_product_cutoff_shape():
    cutoff = CutoffSpec(0.5, PRODUCT)
    assert cutoff(0.0, 0.0) == pytest.approx(1.0)
    assert cutoff(0.3, 0.4) > 0
    assert cutoff(0.5, 0.1) == 0.0
    assert cutoff(0.2, 0.1) == pytest.approx(float(cutoff.profile(0.2) * cutoff.profile(0.1)))
    with pytest.raises(ValueError):
        CutoffSpec(0.5, "box")


@pytest.mark.parametrize(
    "expression, harmonic",
    [
        ("x1^2+x2^2", (2, 1.0, 0.0)),
        ("x1^2-x2^2", (2, 0.0, 1.0)),
        ("x1^2*x2^2", (4, 0.125, 0.125)),
        ("x1*x2", (2, 0.0, 0.5)),
    ],
)
def test_circle_harmonic(parse, expression, harmonic):
    n, a, b = circle_harmonic(parse(expression))
    assert n == harmonic[0]
    assert a == pytest.approx(harmonic[1], abs=1e-14)
    assert b == pytest.approx(harmonic[2], abs=1e-14)


@pytest.mark.parametrize("expression", ["x1^3+x2^3", "x1^4+x2^2", "x1^4+x1*x2^3"])
def test_no_single_circle_harmonic(parse, expression):
    assert circle_harmonic(parse(expression)) is None


@pytest.mark.parametrize(
    "expression, cutoff, method",
    [
        ("x1^2*x2^2", CutoffSpec(0.5), "bessel"),
        ("x1^2+x2^2", CutoffSpec(1.0), "bessel"),
        ("x1^4+x2^2", CutoffSpec(0.5, PRODUCT), "separable"),
        ("x1^3+x2^3+x1", CutoffSpec(1.0, PRODUCT), "separable"),
    ],
)
def test_reductions_match_the_tensor_rule(parse, expression, cutoff, method):
    phi = parse(expression)
    reduced = oscillatory_integral(phi, cutoff, 64.0, threads=1)
    tensor = oscillatory_integral(phi, cutoff, 64.0, threads=1, reduce=False)
    assert reduced.method == method
    assert tensor.method == "tensor"
    assert reduced.value == pytest.approx(tensor.value, rel=1e-6)
    assert reduced.nodes < tensor.nodes


def test_reductions_need_a_matching_cutoff(parse, cutoff):
    assert oscillatory_integral(parse("x1^4+x2^2"), cutoff, 16.0, threads=1).method == "tensor"
    assert oscillatory_integral(parse("x1^2*x2^2"), CutoffSpec(0.5, PRODUCT), 16.0, threads=1).method == "tensor"
    shifted = oscillatory_integral(parse("x1^2+x2^2"), cutoff, 16.0, s=(0.1, 0.0), threads=1)
    assert shifted.method == "tensor"



def test_nondegenerate_phase_decays_like_one_over_lambda(parse, cutoff):
    phi = parse("x1^2+x2^2")
    scaled = [lam * oscillatory_integral(phi, cutoff, lam).magnitude for lam in geometric_grid(256, 16384)]
    assert max(scaled) <= 1.05 * min(scaled)
    assert scaled[-1] == pytest.approx(math.pi, rel=0.01)

PYTHAGOREAN = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29)]


@settings(max_examples=20, deadline=None)
@given(
    triple=st.sampled_from(PYTHAGOREAN),
    flip=st.booleans(),
    expression=st.sampled_from(["x1^4+x2^2", "(x2-x1^2)^2+x1^5"]),
)
def test_rotation_keeps_the_magnitude(triple, flip, expression):
    a, b, c = triple
    if flip:
        a, b = b, a
    phi = parse_polynomial(expression)
    rotated = phi.linear_substitute(Fraction(a, c), Fraction(-b, c), Fraction(b, c), Fraction(a, c))
    cutoff = CutoffSpec(0.5)
    base = oscillatory_integral(phi, cutoff, 32.0, threads=1)
    moved = oscillatory_integral(rotated, cutoff, 32.0, threads=1)
    assert moved.magnitude == pytest.approx(base.magnitude, rel=1e-6)


def test_joint_fit_recovers_a_planted_log_power():
    lams = np.array(geometric_grid(128, 32768))
    samples = lams**-0.5 * np.log(lams) ** 1.0 * 3.0
    results = [OscillatoryResult(float(lam), (0.0, 0.0), complex(y), 0.0) for lam, y in zip(lams, samples)]
    fit = _fit_results(results, None)
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.log_power == pytest.approx(1.0, abs=1e-9)
    assert fit.detected_log_power == 1
    fixed = _fit_results(results, 0)
    assert fixed.fixed_log_power == 0
    assert fixed.joint_slope == pytest.approx(-0.5, abs=1e-9)
    assert fixed.log_power == pytest.approx(1.0, abs=1e-9)
    assert fixed.slope > -0.5


@pytest.mark.slow
@pytest.mark.parametrize(
    "expression, cutoff, height, grid",
    [
        ("x1^2+x2^2", CutoffSpec(0.5), "1", geometric_grid(128, 32768)),
        ("x1^4+x2^2", CutoffSpec(1.0, PRODUCT), "4/3", geometric_grid(128, 32768)),
        ("x1^3+x2^3", CutoffSpec(1.0, PRODUCT), "3/2", geometric_grid(128, 32768)),
        ("(x2-x1^2)^2+x1^5", CutoffSpec(0.5), "10/7", geometric_grid(64, 8192)),
    ],
)
def test_decay_rate_matches_height(parse, expression, cutoff, height, grid):
    fit = decay_fit(parse(expression), cutoff, grid, log_power=0)
    assert fit.within(-1 / Fraction(height), 0.05)
    assert fit.fixed_log_power == 0


@pytest.mark.slow
def test_joint_fit_separates_the_log_factor(parse):
    grid = geometric_grid(128, 32768)
    plain = decay_fit(parse("x1^2+x2^2"), CutoffSpec(0.5), grid)
    assert plain.log_power < 0.3
    assert plain.detected_log_power == 0
    product = decay_fit(parse("x1^2*x2^2"), CutoffSpec(1.0), grid)
    assert product.log_power > 0.5
    assert product.detected_log_power == 1
    assert all(result.method == "bessel" for result in product.evaluations)


@pytest.mark.slow
def test_scaled_magnitude_grows_with_a_log_factor(parse):
    fit = decay_fit(parse("x1^2*x2^2"), CutoffSpec(1.0), geometric_grid(128, 32768))
    scaled = [lam**0.5 * magnitude for lam, magnitude in fit.samples]
    assert scaled == sorted(scaled)


@pytest.mark.slow
@pytest.mark.parametrize("lam", [2.0**8, 2.0**10])
@pytest.mark.parametrize(
    "expression, cutoff, height, low, high",
    [
        ("x1^2*x2^2", CutoffSpec(1.0), 2, 1.6, 2.4),
        ("x1^2+x2^2", CutoffSpec(1.0), 1, 0.8, 1.25),
        ("x1^4+x2^2", CutoffSpec(1.0, PRODUCT), Fraction(4, 3), 0.8, 1.25),
    ],
)
def test_log_doubling(parse, lam, expression, cutoff, height, low, high):
    assert low <= log_doubling_ratio(parse(expression), cutoff, lam, height) <= high


@pytest.mark.slow
def test_uniform_decay_keeps_the_rate(parse, cutoff):
    fit = uniform_decay_probe(parse("x1^4+x2^2"), cutoff, geometric_grid(64, 8192), s_samples=3, log_power=0)
    assert fit.slope <= -0.75 + 0.05
