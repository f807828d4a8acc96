from hypothesis import strategies as st

from newtonheight.polynomial import BivariatePolynomial


def polynomials(max_exponent=4, max_terms=5):
    """Small polynomials with rational coefficients."""
    coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=6).filter(lambda c: c != 0)
    monomials = st.tuples(st.integers(0, max_exponent), st.integers(0, max_exponent))
    return st.dictionaries(monomials, coefficients, max_size=max_terms).map(BivariatePolynomial)


# (expression, h, nu, restriction p'_c)
CORPUS = [
    ("x1^2+x2^2", "1", 0, "4"),
    ("x1^4+x2^2", "4/3", 0, "14/3"),
    ("x1^2*x2^2", "2", 1, "6"),
    ("(x2-x1^2)^2+x1^5", "10/7", 0, "14/3"),
    ("(x2-x1^2)^4", "4", 0, "8"),
]
