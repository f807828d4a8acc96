import logging
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import NamedTuple

import sympy

from newtonheight.config import MAX_DEGREE
from newtonheight.errors import DegreeLimitError, PreconditionError

logger = logging.getLogger(__name__)

__all__ = [
    "Monomial",
    "JetTerm",
    "BivariatePolynomial",
    "shear_substitute",
    "evaluate",
    "evaluate_exact",
    "partial_derivative",
    "to_sympy",
    "from_sympy",
]

SYMBOLS = sympy.symbols("x1 x2")


class Monomial(NamedTuple):
    exponent1: int
    exponent2: int


@dataclass(frozen=True)
class JetTerm:
    """One shear term ``b * x1**m`` of a root jet."""

    coefficient: Fraction
    exponent: int

    def __post_init__(self):
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        if self.coefficient == 0:
            raise ValueError("Jet coefficient must be nonzero")
        if self.exponent < 1:
            raise ValueError(f"Jet exponent must be at least 1, got {self.exponent}")

    def negate(self):
        return JetTerm(-self.coefficient, self.exponent)

    def to_dict(self):
        return {"coefficient": str(self.coefficient), "exponent": self.exponent}


def _format_coefficient(coefficient, has_variables):
    magnitude = abs(coefficient)
    if has_variables and magnitude == 1:
        return ""
    return f"{magnitude}*" if has_variables else f"{magnitude}"


def _format_monomial(monomial):
    parts = []
    for name, power in (("x1", monomial.exponent1), ("x2", monomial.exponent2)):
        if power == 1:
            parts.append(name)
        elif power > 1:
            parts.append(f"{name}^{power}")
    return "*".join(parts)


class BivariatePolynomial:
    """
    Exact polynomial in ``x1, x2`` with rational coefficients.

    Instances are immutable and hashable. Zero coefficients are never stored, so two
    polynomials are equal iff their term maps are equal.
    """

    __slots__ = ("_terms", "_max_degree")

    def __init__(self, terms=None, max_degree=MAX_DEGREE):
        cleaned = {}
        for monomial, coefficient in (terms or {}).items():
            a1, a2 = monomial
            if a1 < 0 or a2 < 0:
                raise ValueError(f"Negative exponent in monomial {(a1, a2)}")
            coefficient = Fraction(coefficient)
            if coefficient != 0:
                cleaned[Monomial(int(a1), int(a2))] = coefficient
        self._terms = MappingProxyType(cleaned)
        self._max_degree = max_degree
        degree = self.total_degree()
        if degree > max_degree:
            raise DegreeLimitError(f"Total degree {degree} exceeds the limit {max_degree}")

    @classmethod
    def constant(cls, value, max_degree=MAX_DEGREE):
        return cls({(0, 0): value}, max_degree)

    @classmethod
    def monomial(cls, coefficient, exponent1, exponent2, max_degree=MAX_DEGREE):
        return cls({(exponent1, exponent2): coefficient}, max_degree)

    @classmethod
    def x1(cls, max_degree=MAX_DEGREE):
        return cls({(1, 0): 1}, max_degree)

    @classmethod
    def x2(cls, max_degree=MAX_DEGREE):
        return cls({(0, 1): 1}, max_degree)

    # Structure

    @property
    def terms(self):
        return self._terms

    @property
    def max_degree(self):
        return self._max_degree

    def support(self):
        return sorted(self._terms)

    def coefficient(self, exponent1, exponent2):
        return self._terms.get(Monomial(exponent1, exponent2), Fraction(0))

    def is_zero(self):
        return not self._terms

    def total_degree(self):
        return max((a1 + a2 for a1, a2 in self._terms), default=0)

    def degree_in(self, variable):
        index = 0 if variable == 1 else 1
        return max((monomial[index] for monomial in self._terms), default=0)

    def filter_terms(self, keep):
        """Polynomial made of the terms whose monomial satisfies ``keep``."""
        return self._new({m: c for m, c in self._terms.items() if keep(m)})

    def _new(self, terms):
        return BivariatePolynomial(terms, self._max_degree)

    # Arithmetic

    def _coerce(self, other):
        if isinstance(other, BivariatePolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return BivariatePolynomial.constant(other, self._max_degree)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for monomial, coefficient in other._terms.items():
            terms[monomial] = terms.get(monomial, 0) + coefficient
        return self._new(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._new({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        degree = self.total_degree() + other.total_degree()
        if not self.is_zero() and not other.is_zero() and degree > self._max_degree:
            raise DegreeLimitError(f"Product degree {degree} exceeds the limit {self._max_degree}")
        terms = {}
        for (a1, a2), c in self._terms.items():
            for (b1, b2), e in other._terms.items():
                key = (a1 + b1, a2 + b2)
                terms[key] = terms.get(key, 0) + c * e
        return self._new(terms)

    __rmul__ = __mul__

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError(f"Exponent must be a nonnegative integer, got {exponent}")
        if exponent * self.total_degree() > self._max_degree:
            raise DegreeLimitError(
                f"Power degree {exponent * self.total_degree()} exceeds the limit {self._max_degree}"
            )
        result = BivariatePolynomial.constant(1, self._max_degree)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BivariatePolynomial.constant(other)
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        return dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # Evaluation

    def _columns(self):
        """Coefficients grouped by the power of x2: {a2: {a1: c}}."""
        columns = {}
        for (a1, a2), c in self._terms.items():
            columns.setdefault(a2, {})[a1] = c
        return columns

    @staticmethod
    def _horner(coefficients, degree, x, zero):
        value = zero
        for power in range(degree, -1, -1):
            value = value * x + coefficients.get(power, zero)
        return value

    def evaluate(self, point):
        """Floating evaluation by nested Horner schemes (x1 inside, x2 outside)."""
        x1, x2 = float(point[0]), float(point[1])
        columns = {
            a2: {a1: float(c) for a1, c in column.items()} for a2, column in self._columns().items()
        }
        values = {a2: self._horner(column, max(column), x1, 0.0) for a2, column in columns.items()}
        return self._horner(values, max(values, default=0), x2, 0.0)

    def evaluate_exact(self, point):
        x1, x2 = Fraction(point[0]), Fraction(point[1])
        columns = self._columns()
        values = {
            a2: self._horner(column, max(column), x1, Fraction(0)) for a2, column in columns.items()
        }
        return self._horner(values, max(values, default=0), x2, Fraction(0))

    # Calculus and substitutions

    def partial_derivative(self, order1, order2):
        if order1 < 0 or order2 < 0:
            raise ValueError("Derivative orders must be nonnegative")
        terms = {}
        for (a1, a2), c in self._terms.items():
            if a1 < order1 or a2 < order2:
                continue
            factor = 1
            for k in range(order1):
                factor *= a1 - k
            for k in range(order2):
                factor *= a2 - k
            terms[(a1 - order1, a2 - order2)] = c * factor
        return self._new(terms)

    def shear_substitute(self, jet):
        """
        Return ``phi(y1, y2 + psi(y1))`` with ``psi = sum(b * y1**m)`` over the jet.

        :param jet: JetTerm sequence with strictly increasing exponents.
        :return: The exact composed polynomial.
        :raises PreconditionError: If the jet exponents do not strictly increase.
        :raises DegreeLimitError: If the composition exceeds the degree guard.
        """
        jet = list(jet)
        exponents = [term.exponent for term in jet]
        if any(b <= a for a, b in zip(exponents, exponents[1:])):
            raise PreconditionError(f"Jet exponents must strictly increase, got {exponents}")
        if not jet or self.is_zero():
            return self

        shifted = BivariatePolynomial.x2(self._max_degree)
        for term in jet:
            shifted = shifted + BivariatePolynomial.monomial(
                term.coefficient, term.exponent, 0, self._max_degree
            )

        guard = self.degree_in(2) * exponents[-1] + self.degree_in(1)
        work_limit = max(self._max_degree, guard)
        shifted = BivariatePolynomial(shifted.terms, work_limit)
        powers = [BivariatePolynomial.constant(1, work_limit)]
        for _ in range(self.degree_in(2)):
            powers.append(powers[-1] * shifted)

        terms = {}
        for (a1, a2), c in self._terms.items():
            for (b1, b2), e in powers[a2].terms.items():
                key = (a1 + b1, b2)
                terms[key] = terms.get(key, 0) + c * e
        return self._new(terms)

    def swap(self):
        """Exchange the roles of x1 and x2."""
        return self._new({(a2, a1): c for (a1, a2), c in self._terms.items()})

    def linear_substitute(self, a, b, c, d):
        """Return ``phi(a*x1 + b*x2, c*x1 + d*x2)``; the matrix must be invertible."""
        a, b, c, d = (Fraction(v) for v in (a, b, c, d))
        if a * d - b * c == 0:
            raise PreconditionError("Linear substitution matrix is singular")
        u = BivariatePolynomial({(1, 0): a, (0, 1): b}, self._max_degree)
        v = BivariatePolynomial({(1, 0): c, (0, 1): d}, self._max_degree)
        u_powers = [BivariatePolynomial.constant(1, self._max_degree)]
        v_powers = [BivariatePolynomial.constant(1, self._max_degree)]
        for _ in range(self.degree_in(1)):
            u_powers.append(u_powers[-1] * u)
        for _ in range(self.degree_in(2)):
            v_powers.append(v_powers[-1] * v)
        result = BivariatePolynomial({}, self._max_degree)
        for (a1, a2), coefficient in self._terms.items():
            result = result + coefficient * (u_powers[a1] * v_powers[a2])
        return result

    # Printing

    def __str__(self):
        if self.is_zero():
            return "0"
        pieces = []
        for monomial in sorted(self._terms):
            coefficient = self._terms[monomial]
            variables = _format_monomial(monomial)
            body = _format_coefficient(coefficient, bool(variables)) + variables
            if not pieces:
                pieces.append(f"-{body}" if coefficient < 0 else body)
            else:
                pieces.append(f"- {body}" if coefficient < 0 else f"+ {body}")
        return " ".join(pieces)

    def __repr__(self):
        return f"BivariatePolynomial('{self}')"

    def to_dict(self):
        return {f"{a1},{a2}": str(c) for (a1, a2), c in sorted(self._terms.items())}


def shear_substitute(phi, jet):
    return phi.shear_substitute(jet)


def evaluate(phi, point):
    return phi.evaluate(point)


def evaluate_exact(phi, point):
    return phi.evaluate_exact(point)


def partial_derivative(phi, order1, order2):
    return phi.partial_derivative(order1, order2)



def to_sympy(phi):
    """``phi`` as a sympy Poly in ``x1, x2`` over QQ."""
    terms = {monomial: sympy.Rational(c.numerator, c.denominator) for monomial, c in phi.terms.items()}
    return sympy.Poly.from_dict(terms or {(0, 0): 0}, *SYMBOLS, domain="QQ")


def from_sympy(poly, max_degree=MAX_DEGREE):
    terms = {}
    for (a1, a2), c in poly.terms():
        c = sympy.Rational(c)
        terms[(int(a1), int(a2))] = Fraction(int(c.p), int(c.q))
    return BivariatePolynomial(terms, max_degree)
