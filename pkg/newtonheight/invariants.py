import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import sympy

from newtonheight.adaptation import adapt_coordinates, height, linearly_adapt
from newtonheight.config import SERIES_ORDER
from newtonheight.errors import PipelineError, PreconditionError
from newtonheight.homogeneous import factorize_homogeneous
from newtonheight.newton import (
    ExponentPoint,
    Weight,
    build_polyhedron,
    edge_sequence,
    kappa_principal_part,
    newton_distance,
)
from newtonheight.polynomial import JetTerm

logger = logging.getLogger(__name__)


def _slope_str(a):
    return "inf" if a == math.inf else str(a)


def _bound_str(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return str(x)


@dataclass(frozen=True)
class EdgeInvariant:
    index: int
    weight: Weight
    a: object  # Fraction or math.inf
    h: Optional[Fraction]

    def to_dict(self):
        return {
            "edgeIndex": self.index,
            "weight": self.weight.to_list(),
            "a": _slope_str(self.a),
            "h": str(self.h) if self.h is not None else None,
        }


@dataclass(frozen=True)
class BoundaryPiece:
    """Piece of the augmented boundary: a ray on the principal line, a compact edge or the horizontal ray."""

    kind: str  # "principal-ray", "edge" or "horizontal-ray"
    weight: Weight
    t1_min: object  # -inf for the principal ray
    t1_max: object  # +inf for the horizontal ray

    def meet_diagonal(self, m):
        """Point where ``t2 = t1 + m + 1`` crosses the line of this piece, if inside its range."""
        k1, k2 = self.weight
        t1 = (1 - k2 * (m + 1)) / (k1 + k2)
        if self.t1_min <= t1 <= self.t1_max:
            return ExponentPoint(t1, t1 + m + 1)
        return None


@dataclass(frozen=True)
class AugmentedPolyhedron:
    base: object
    principal_line: Weight
    touching_vertex: ExponentPoint
    boundary: tuple
    intersection: ExponentPoint

    @property
    def r_height(self):
        return self.intersection.t2 - 1

    def contains(self, point):
        return all(piece.weight.degree(point) >= 1 for piece in self.boundary)

    def to_dict(self):
        return {
            "principalLine": self.principal_line.to_list(),
            "touchingVertex": self.touching_vertex.to_list(),
            "boundary": [
                {
                    "kind": piece.kind,
                    "weight": piece.weight.to_list(),
                    "t1Range": [_bound_str(piece.t1_min), _bound_str(piece.t1_max)],
                }
                for piece in self.boundary
            ],
            "intersection": self.intersection.to_list(),
        }


@dataclass(frozen=True)
class SingularityClass:
    tag: str  # "A", "Ainfinity", "D" or "unknown"
    n: Optional[int] = None

    def __str__(self):
        return f"A({self.n - 1})" if self.tag == "A" else self.tag


@dataclass(frozen=True)
class InvariantReport:
    d: Fraction
    d_linear: Fraction
    h: Fraction
    nu: int
    m: Optional[int]
    linearly_adaptable: bool
    edge_invariants: tuple
    r_height: Optional[Fraction]
    restriction_pc_prime: Fraction
    singularity_class: Optional[SingularityClass]

    @property
    def decay_rate(self):
        return 1 / self.h

    @property
    def contact_index(self):
        return 1 / self.h

    @property
    def log_exponent(self):
        return self.nu

    @property
    def maximal_range_lower(self):
        return max(self.h, Fraction(2))

    @property
    def restriction_pc(self):
        return self.restriction_pc_prime / (self.restriction_pc_prime - 1)

    def to_dict(self):
        return {
            "d": str(self.d),
            "dLinear": str(self.d_linear),
            "h": str(self.h),
            "nu": self.nu,
            "m": self.m,
            "linearlyAdaptable": self.linearly_adaptable,
            "edgeInvariants": [e.to_dict() for e in self.edge_invariants],
            "rHeight": str(self.r_height) if self.r_height is not None else None,
            "decayRate": str(self.decay_rate),
            "logExponent": self.log_exponent,
            "maximalRange": {"lower": str(self.maximal_range_lower), "lowerInclusive": False, "upper": "inf"},
            "restrictionPcPrime": str(self.restriction_pc_prime),
            "restrictionPc": str(self.restriction_pc),
            "adaptedPcPrime": str(2 * self.h + 2),
            "contactIndex": str(self.contact_index),
            "oscillationIndex": str(1 / self.h),
            "sublevelGrowthRate": str(1 / self.h),
            "singularityClass": str(self.singularity_class) if self.singularity_class else None,
        }


def _require_jet(adaptation):
    if not adaptation.jet or adaptation.m is None or adaptation.m < 2:
        raise PreconditionError(
            "Edge invariants need a non-adapted linearly normalized phase (nonempty jet, m >= 2)"
        )


def edge_invariants(adaptation):
    """
    Weights, ``a_l`` and ``h_l`` for the edges of the adapted Newton polyhedron.

    ``h_l = (1 + m*kappa1 - kappa2) / (kappa1 + kappa2)`` is filled in for ``a_l > m``.
    """
    _require_jet(adaptation)
    m = adaptation.m
    result = []
    for entry in edge_sequence(build_polyhedron(adaptation.adapted_polynomial)):
        k1, k2 = entry.weight
        h_l = (1 + m * k1 - k2) / (k1 + k2) if entry.slope_reciprocal > m else None
        result.append(EdgeInvariant(entry.index, entry.weight, entry.slope_reciprocal, h_l))
    return tuple(result)


def augmented_polyhedron(adaptation, principal_line=None):
    """
    Augment the adapted Newton polyhedron by the half-line of the principal line.

    The half-line ends at the touching vertex with the smallest second coordinate; the
    boundary continues along the adapted edges to its right and the horizontal ray. The
    returned intersection with ``t2 = t1 + m + 1`` gives the r-height as ``t2 - 1``.

    :raises PipelineError: If the principal line does not support the adapted polyhedron.
    """
    _require_jet(adaptation)
    line = principal_line or adaptation.principal_weight
    m = adaptation.m
    base = build_polyhedron(adaptation.adapted_polynomial)
    degrees = [line.degree(point) for point in adaptation.adapted_polynomial.support()]
    if min(degrees) != 1:
        raise PipelineError(
            f"Principal line {line.to_list()} does not support the adapted polyhedron (min degree {min(degrees)})"
        )

    touching = [i for i, vertex in enumerate(base.vertices) if line.degree(vertex) == 1]
    start = min(touching, key=lambda i: base.vertices[i].t2)
    vertex = base.vertices[start]

    pieces = [BoundaryPiece("principal-ray", line, -math.inf, vertex.t1)]
    for edge in base.compact_edges[start:]:
        left, right = edge.endpoints
        pieces.append(BoundaryPiece("edge", edge.weight, left.t1, right.t1))
    last = base.vertices[-1]
    if last.t2 > 0:
        pieces.append(BoundaryPiece("horizontal-ray", Weight(Fraction(0), 1 / last.t2), last.t1, math.inf))

    for piece in pieces:
        point = piece.meet_diagonal(m)
        if point is not None:
            break
    else:
        raise PipelineError(f"Diagonal t2 = t1 + {m + 1} misses the augmented boundary")

    return AugmentedPolyhedron(base, line, vertex, tuple(pieces), point)


def r_height(adaptation, d):
    """
    ``max(d, max h_l over a_l > m)``, cross-checked against the augmented polyhedron.

    :raises PipelineError: If the formula and the geometric reading disagree.
    """
    invariants = edge_invariants(adaptation)
    value = max([d] + [e.h for e in invariants if e.h is not None])
    geometric = augmented_polyhedron(adaptation).r_height
    if geometric != value:
        raise PipelineError(f"r-height formula gives {value} but the augmented polyhedron gives {geometric}")
    return value


def critical_exponents(phi, adaptation=None, series_order=SERIES_ORDER):
    """
    Collect the invariants of ``phi``: distance, height, Varchenko exponent, r-height,
    critical restriction exponent and, for linear height below 2, the singularity class.
    """
    adaptation = adaptation or adapt_coordinates(phi)
    heights = height(phi, adaptation)
    d_linear = adaptation.linear_distance
    linearly_adaptable = not adaptation.jet

    if linearly_adaptable:
        invariants = ()
        hr = None
        pc_prime = 2 * heights.h + 2
    else:
        invariants = edge_invariants(adaptation)
        hr = r_height(adaptation, d_linear)
        if not d_linear <= hr < heights.h:
            raise PipelineError(f"r-height {hr} outside [{d_linear}, {heights.h})")
        pc_prime = 2 * hr + 2

    singularity = classify_singularity(phi, series_order) if d_linear < 2 else None
    report = InvariantReport(
        d=heights.d_original,
        d_linear=d_linear,
        h=heights.h,
        nu=heights.nu,
        m=adaptation.m,
        linearly_adaptable=linearly_adaptable,
        edge_invariants=invariants,
        r_height=hr,
        restriction_pc_prime=pc_prime,
        singularity_class=singularity,
    )
    logger.info(f"Invariants of {phi}: h={report.h}, nu={report.nu}, hR={hr}, p'_c={pc_prime}")
    return report


# Normal form classification


def _series_mul(a, b, order):
    out = [Fraction(0)] * (order + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(order + 1 - i):
                if b[j]:
                    out[i + j] += x * b[j]
    return out


def _series_inverse(a, order):
    inverse = [Fraction(0)] * (order + 1)
    inverse[0] = 1 / a[0]
    for k in range(1, order + 1):
        total = sum(a[j] * inverse[k - j] for j in range(1, k + 1))
        inverse[k] = -total * inverse[0]
    return inverse


def _compose_series(phi, g, order):
    """Truncated series of ``phi(y1, g(y1))``."""
    columns = {}
    for (a1, a2), c in phi.terms.items():
        if a1 <= order:
            columns.setdefault(a2, [Fraction(0)] * (order + 1))[a1] += c
    acc = [Fraction(0)] * (order + 1)
    for power in range(phi.degree_in(2), -1, -1):
        acc = _series_mul(acc, g, order)
        column = columns.get(power)
        if column:
            acc = [x + y for x, y in zip(acc, column)]
    return acc


def _critical_curve(phi, order):
    """Series ``g`` with ``d(phi)/dx2 (y1, g(y1)) = 0``, by Newton's method."""
    first = phi.partial_derivative(0, 1)
    second = phi.partial_derivative(0, 2)
    g = [Fraction(0)] * (order + 1)
    for _ in range(order.bit_length() + 2):
        residual = _compose_series(first, g, order)
        if not any(residual):
            break
        slope = _compose_series(second, g, order)
        step = _series_mul(residual, _series_inverse(slope, order), order)
        g = [x - y for x, y in zip(g, step)]
    return g


def _has_double_factor_through_origin(phi):
    x1, x2 = sympy.symbols("x1 x2")
    expr = sum(sympy.Rational(c) * x1**a1 * x2**a2 for (a1, a2), c in phi.terms.items())
    common = sympy.gcd(expr, sympy.diff(expr, x2))
    return common.free_symbols != set() and common.subs({x1: 0, x2: 0}) == 0


def _cubic_lines(cubic):
    """Distinct linear factors ``alpha*x1 + beta*x2`` of a binary cubic with multiplicities."""
    factorization = factorize_homogeneous(cubic, Weight(Fraction(1, 3), Fraction(1, 3)))
    lines = []
    if factorization.trivial_order1:
        lines.append(((Fraction(1), Fraction(0)), factorization.trivial_order1))
    if factorization.trivial_order2:
        lines.append(((Fraction(0), Fraction(1)), factorization.trivial_order2))
    for root in factorization.roots:
        # x2 - lambda*x1; complex and irrational roots only occur for three distinct lines
        lines.append(((-root.value, Fraction(1)) if root.is_rational else None, root.multiplicity))
    return lines


def _rank_zero_class(phi):
    """D4 for three distinct lines in the cubic 3-jet; otherwise the vertex test after a linear map."""
    cubic = phi.filter_terms(lambda m: m.exponent1 + m.exponent2 == 3)
    if cubic.is_zero():
        return SingularityClass("unknown")
    lines = _cubic_lines(cubic)
    if len(lines) == 3:
        return SingularityClass("D", 4)
    if len(lines) == 1:
        return SingularityClass("unknown")

    # Simple line to x1, double line to x2: the 3-jet becomes c*x1*x2**2.
    (simple, _), (double, _) = sorted(lines, key=lambda line: line[1])
    a, b = simple
    c, d = double
    det = a * d - b * c
    moved = phi.linear_substitute(d / det, -b / det, -c / det, a / det)
    if ExponentPoint(Fraction(1), Fraction(2)) in build_polyhedron(moved).vertices:
        return SingularityClass("D")
    return SingularityClass("unknown")


def classify_singularity(phi, series_order=SERIES_ORDER):
    """
    Normal-form type of ``phi`` when its linear height is below 2.

    Rank 2 Hessian gives A(1). Rank 1: after rotating the quadratic part onto ``x2**2``,
    the type is A(n-1) with ``n`` the order of ``phi`` along its critical curve, or
    Ainfinity when that restriction vanishes identically. Rank 0: D4 when the cubic 3-jet
    splits into three distinct lines (over C); with a double line, D when ``(1, 2)`` is a
    vertex of the Newton diagram once the simple line is ``x1 = 0`` and the double one
    ``x2 = 0``; unknown otherwise.

    :raises PreconditionError: If the distance in linearly adapted coordinates is at least 2.
    """
    normalized = linearly_adapt(phi).polynomial
    d_linear = newton_distance(build_polyhedron(normalized))
    if d_linear >= 2:
        raise PreconditionError(f"Classification needs linear height below 2, got {d_linear}")

    a, b, c = phi.coefficient(2, 0), phi.coefficient(1, 1), phi.coefficient(0, 2)
    if a or b or c:
        if 4 * a * c - b * b != 0:
            return SingularityClass("A", 2)
        oriented = phi.shear_substitute([JetTerm(-b / (2 * c), 1)]) if c and b else phi
        oriented = oriented if c else oriented.swap()
        restriction = _compose_series(oriented, _critical_curve(oriented, series_order), series_order)
        for n, coefficient in enumerate(restriction):
            if coefficient:
                return SingularityClass("A", n)
        if _has_double_factor_through_origin(oriented):
            return SingularityClass("Ainfinity")
        logger.warning(f"Order of {phi} along its critical curve exceeds {series_order}")
        return SingularityClass("unknown")

    return _rank_zero_class(phi)


@dataclass(frozen=True)
class ClusterCheck:
    index: int
    a: Fraction
    cluster_size: int
    exponent1: int
    exponent2: int

    def to_dict(self):
        return {
            "edgeIndex": self.index,
            "a": str(self.a),
            "clusterSize": self.cluster_size,
            "exponent1": self.exponent1,
            "exponent2": self.exponent2,
        }


def verify_cluster_identities(adaptation):
    """
    Check the vertex identities of the adapted Newton polyhedron against root clusters.

    For every compact edge ``l`` the factorized principal part must read
    ``c * y1**A[l-1] * y2**B[l] * prod(...)``; with cluster sizes ``|[l]| = q * sum(n)``
    the vertices satisfy ``A[l-1] = A[0] + sum_{j<l} |[j]| a_j`` and
    ``B[l] = B[n] + sum_{j>l} |[j]|``.

    :return: list of ClusterCheck, one per compact edge.
    :raises PipelineError: On any violated identity.
    """
    phi = adaptation.adapted_polynomial
    polyhedron = build_polyhedron(phi)
    vertices = polyhedron.vertices
    checks = []
    for index, edge in enumerate(polyhedron.compact_edges, start=1):
        factorization = factorize_homogeneous(kappa_principal_part(phi, edge.weight), edge.weight)
        size = factorization.q * sum(root.multiplicity for root in factorization.roots)
        checks.append(
            ClusterCheck(
                index,
                edge.weight.kappa2 / edge.weight.kappa1,
                size,
                factorization.trivial_order1,
                factorization.trivial_order2,
            )
        )

    nu1, nu2 = vertices[0].t1, vertices[-1].t2
    for check in checks:
        left, right = vertices[check.index - 1], vertices[check.index]
        expected_a = nu1 + sum(c.cluster_size * c.a for c in checks if c.index < check.index)
        expected_b = nu2 + sum(c.cluster_size for c in checks if c.index > check.index)
        if (check.exponent1, check.exponent2) != (left.t1, right.t2):
            raise PipelineError(
                f"Edge {check.index}: factor exponents ({check.exponent1}, {check.exponent2}) "
                f"differ from vertices ({left.t1}, {right.t2})"
            )
        if expected_a != left.t1 or expected_b != right.t2:
            raise PipelineError(
                f"Edge {check.index}: cluster identities give ({expected_a}, {expected_b}), "
                f"vertices are ({left.t1}, {right.t2})"
            )
    logger.info(f"Cluster identities hold on {len(checks)} edges of {phi}")
    return checks
