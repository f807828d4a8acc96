from fractions import Fraction

import pytest
from hypothesis import given, settings

from newtonheight.errors import DegreeLimitError, ParseError
from newtonheight.parser import parse_polynomial
from newtonheight.polynomial import BivariatePolynomial
from tests.cases import polynomials

X1 = BivariatePolynomial.x1()
X2 = BivariatePolynomial.x2()


def test_parse_expands_powers():
    assert parse_polynomial("(x2-x1^2)^2+x1^5") == X2**2 - 2 * X1**2 * X2 + X1**4 + X1**5


def test_aliases_and_rationals():
    assert parse_polynomial("x*y - 3/2*y^2") == X1 * X2 - Fraction(3, 2) * X2**2
    assert parse_polynomial("-(x1 - x2)^2") == -(X1 - X2) ** 2


@pytest.mark.parametrize(
    "text, position",
    [
        ("x1^", 3),
        ("x1 + * x2", 5),
        ("z*x1", 0),
        ("(x1 + x2", 8),
        ("x1 $ x2", 3),
    ],
)
def test_syntax_errors_report_position(text, position):
    with pytest.raises(ParseError) as excinfo:
        parse_polynomial(text)
    assert excinfo.value.position == position


@pytest.mark.parametrize("text", ["1.5*x1^2", "x1^-2", "1/0*x1", "x3^2"])
def test_rejected_literals(text):
    with pytest.raises(ParseError):
        parse_polynomial(text)


def test_degree_guard():
    with pytest.raises(DegreeLimitError):
        parse_polynomial("(x1+x2)^70")
    assert parse_polynomial("x1^10", max_degree=10).total_degree() == 10
    with pytest.raises(DegreeLimitError):
        parse_polynomial("x1^11", max_degree=10)


@settings(max_examples=500)
@given(polynomials())
def test_printed_form_parses_back(phi):
    assert parse_polynomial(str(phi)) == phi
