import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import sympy

from newtonheight.config import ROOT_ISOLATION_WIDTH
from newtonheight.errors import PreconditionError
from newtonheight.polynomial import BivariatePolynomial

logger = logging.getLogger(__name__)

_T = sympy.Symbol("t")


def _to_fraction(value):
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class RootClass:
    """
    One distinct nonzero root ``lambda`` of the reduced univariate polynomial.

    Rational roots carry ``value``; irrational real roots carry an isolating ``interval``;
    complex roots only an ``approximation``.
    """

    multiplicity: int
    is_real: bool
    value: Optional[Fraction] = None
    interval: Optional[tuple] = None
    approximation: complex = 0j

    @property
    def is_rational(self):
        return self.value is not None

    @property
    def sign(self):
        if not self.is_real:
            return 0
        if self.is_rational:
            return (self.value > 0) - (self.value < 0)
        low, high = self.interval
        middle = (low + high) / 2
        return (middle > 0) - (middle < 0)

    def to_dict(self):
        return {
            "multiplicity": self.multiplicity,
            "real": self.is_real,
            "value": str(self.value) if self.is_rational else None,
            "interval": [str(x) for x in self.interval] if self.interval else None,
            "approximation": [self.approximation.real, self.approximation.imag],
        }


@dataclass(frozen=True)
class HomogeneousFactorization:
    """
    ``P = c * x1**nu1 * x2**nu2 * prod((x2**q - lambda_l * x1**p) ** n_l)``.

    ``factors`` keeps the monic square-free factors of ``R(t)`` (coefficients, lowest
    degree first) with their multiplicities so that :meth:`expand` is exact even when
    roots are irrational or complex.
    """

    constant: Fraction
    trivial_order1: int
    trivial_order2: int
    p: int
    q: int
    roots: tuple
    factors: tuple

    def expand(self):
        result = BivariatePolynomial.monomial(self.constant, self.trivial_order1, self.trivial_order2)
        for coefficients, multiplicity in self.factors:
            degree = len(coefficients) - 1
            factor = BivariatePolynomial(
                {(self.p * (degree - j), self.q * j): c for j, c in enumerate(coefficients)}
            )
            result = result * factor**multiplicity
        return result

    def to_dict(self):
        return {
            "constant": str(self.constant),
            "nu1": self.trivial_order1,
            "nu2": self.trivial_order2,
            "p": self.p,
            "q": self.q,
            "roots": [root.to_dict() for root in self.roots],
        }


def _check_homogeneous(P, kappa):
    if kappa.kappa1 == 0:
        raise PreconditionError("kappa1 = 0: the factorization is the trivial x2**nu2 times a unit")
    if P.is_zero():
        raise PreconditionError("Cannot factorize the zero polynomial")
    bad = [m for m in P.support() if kappa.degree(m) != 1]
    if bad:
        raise PreconditionError(
            f"{P} is not homogeneous of degree one for weight ({kappa.kappa1}, {kappa.kappa2}); "
            f"offending monomials {[tuple(m) for m in bad]}"
        )


def _root_classes(factor, multiplicity):
    """Distinct roots of a monic square-free factor, each with the factor's multiplicity."""
    roots = []
    remainder = factor
    for value in factor.ground_roots():
        roots.append(RootClass(multiplicity, True, value=_to_fraction(value), approximation=complex(value)))
        remainder = remainder.quo(sympy.Poly(_T - value, _T, domain="QQ"))
    if remainder.degree() <= 0:
        return roots

    real_count = 0
    for (low, high), _ in remainder.intervals(eps=sympy.Rational(ROOT_ISOLATION_WIDTH)):
        low, high = _to_fraction(low), _to_fraction(high)
        roots.append(
            RootClass(multiplicity, True, interval=(low, high), approximation=complex(float((low + high) / 2)))
        )
        real_count += 1
    for approx in remainder.nroots():
        approx = complex(approx)
        if approx.imag != 0:
            roots.append(RootClass(multiplicity, False, approximation=approx))
    logger.debug(f"Factor {factor.as_expr()} has {real_count} irrational real roots")
    return roots


def factorize_homogeneous(P, kappa):
    """
    Factor a weight-homogeneous polynomial into trivial axis powers and root factors.

    :param P: Polynomial homogeneous of degree one for ``kappa``.
    :param kappa: Weight with ``kappa1 > 0``.
    :return: HomogeneousFactorization.
    :raises PreconditionError: If ``P`` is not homogeneous or ``kappa1 = 0``.
    """
    _check_homogeneous(P, kappa)
    ratio = Fraction(kappa.kappa2) / Fraction(kappa.kappa1)
    p, q = ratio.numerator, ratio.denominator
    support = P.support()
    nu1 = min(m.exponent1 for m in support)
    nu2 = min(m.exponent2 for m in support)

    # Reduced monomials are (p*(N-j), q*j); R(t) = sum c_j t**j.
    coefficients = {}
    for (a1, a2), c in P.terms.items():
        coefficients[(a2 - nu2) // q] = c
    degree = max(coefficients)
    R = sympy.Poly([sympy.Rational(coefficients.get(j, 0)) for j in range(degree, -1, -1)], _T, domain="QQ")

    _, square_free = R.sqf_list()
    roots = []
    factors = []
    for factor, multiplicity in square_free:
        factor = factor.monic()
        if factor.degree() <= 0:
            continue
        roots.extend(_root_classes(factor, multiplicity))
        factors.append((tuple(_to_fraction(c) for c in reversed(factor.all_coeffs())), multiplicity))

    factorization = HomogeneousFactorization(
        constant=coefficients[degree],
        trivial_order1=nu1,
        trivial_order2=nu2,
        p=p,
        q=q,
        roots=tuple(roots),
        factors=tuple(factors),
    )
    logger.debug(f"Factorized {P}: nu=({nu1}, {nu2}), p/q={p}/{q}, {len(roots)} distinct roots")
    return factorization


def _gives_circle_zero(root, p, q):
    if not root.is_real:
        return False
    if q % 2 == 1:
        return True
    return root.sign > 0 or (root.sign < 0 and p % 2 == 1)


def circle_order(P, kappa):
    """Maximal vanishing order of ``P`` along the unit circle."""
    factorization = factorize_homogeneous(P, kappa)
    orders = [factorization.trivial_order1, factorization.trivial_order2]
    orders.extend(
        root.multiplicity
        for root in factorization.roots
        if _gives_circle_zero(root, factorization.p, factorization.q)
    )
    return max(orders)


def homogeneous_height(P, kappa):
    return max(Fraction(circle_order(P, kappa)), kappa.homogeneous_distance)
