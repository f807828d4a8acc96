"""
Recursive-descent parser for phase expressions.

Grammar::

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := base ('^' uint)?
    base     := rational | var | '(' expr ')' | '-' factor
    var      := 'x1' | 'x2' | 'x' | 'y'
    rational := int ('/' posint)?
"""

import logging
import re
from fractions import Fraction

from newtonheight.config import MAX_DEGREE
from newtonheight.errors import DegreeLimitError, ParseError
from newtonheight.polynomial import BivariatePolynomial

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"""
    (?P<space>\s+)
  | (?P<decimal>\d+\.\d*|\.\d+)
  | (?P<number>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^/()])
    """,
    re.VERBOSE,
)

_VARIABLES = {"x1": (1, 0), "x": (1, 0), "x2": (0, 1), "y": (0, 1)}


def _tokenize(text):
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(f"Unexpected character '{text[position]}'", position)
        kind = match.lastgroup
        if kind == "decimal":
            raise ParseError(f"Non-rational literal '{match.group()}'", position)
        if kind != "space":
            tokens.append((kind, match.group(), position))
        position = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, max_degree):
        self.tokens = _tokenize(text)
        self.index = 0
        self.max_degree = max_degree

    @property
    def current(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def accept(self, value):
        if self.current[0] == "op" and self.current[1] == value:
            return self.advance()
        return None

    def expect(self, value):
        token = self.accept(value)
        if token is None:
            found = self.current[1] or "end of input"
            raise ParseError(f"Expected '{value}' but found '{found}'", self.current[2])
        return token

    def parse(self):
        result = self.expr()
        kind, value, position = self.current
        if kind != "end":
            raise ParseError(f"Unexpected '{value}'", position)
        return result

    def expr(self):
        result = self.term()
        while True:
            if self.accept("+"):
                result = result + self.term()
            elif self.accept("-"):
                result = result - self.term()
            else:
                return result

    def term(self):
        result = self.factor()
        while self.accept("*"):
            result = result * self.factor()
        return result

    def factor(self):
        base = self.base()
        caret = self.accept("^")
        if caret is None:
            return base
        kind, value, position = self.current
        if kind == "op" and value == "-":
            raise ParseError("Negative exponent", position)
        if kind != "number":
            raise ParseError("Expected an unsigned integer exponent", position)
        self.advance()
        exponent = int(value)
        if not base.is_zero() and base.total_degree() * exponent > self.max_degree:
            raise DegreeLimitError(
                f"Power at position {caret[2]} has degree {base.total_degree() * exponent}, "
                f"above the limit {self.max_degree}"
            )
        return base**exponent

    def base(self):
        kind, value, position = self.current
        if kind == "number":
            self.advance()
            numerator = int(value)
            if self.accept("/"):
                kind, value, position = self.current
                if kind != "number":
                    raise ParseError("Expected a positive integer denominator", position)
                self.advance()
                if int(value) == 0:
                    raise ParseError("Non-rational literal with zero denominator", position)
                return BivariatePolynomial.constant(Fraction(numerator, int(value)), self.max_degree)
            return BivariatePolynomial.constant(numerator, self.max_degree)
        if kind == "name":
            if value not in _VARIABLES:
                raise ParseError(f"Unknown identifier '{value}'", position)
            self.advance()
            return BivariatePolynomial({_VARIABLES[value]: 1}, self.max_degree)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if self.accept("-"):
            return -self.factor()
        found = value or "end of input"
        raise ParseError(f"Unexpected '{found}'", position)


def parse_polynomial(text, max_degree=MAX_DEGREE):
    """
    Parse a phase expression into its expanded canonical polynomial.

    :param text: Expression in ``x1, x2`` (aliases ``x, y``) with rational coefficients.
    :param max_degree: Total degree guard.
    :return: BivariatePolynomial.
    :raises ParseError: On syntax errors, negative exponents, unknown identifiers or
        non-rational literals.
    :raises DegreeLimitError: If the expression expands beyond ``max_degree``.
    """
    polynomial = _Parser(text, max_degree).parse()
    logger.debug(f"Parsed '{text}' into {polynomial}")
    return polynomial
