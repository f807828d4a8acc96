import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Union

from newtonheight.errors import PreconditionError

logger = logging.getLogger(__name__)

VERTEX = "vertex"
COMPACT_EDGE = "compact-edge"
HORIZONTAL_EDGE = "unbounded-edge-horizontal"
VERTICAL_EDGE = "unbounded-edge-vertical"


class ExponentPoint(NamedTuple):
    t1: Fraction
    t2: Fraction

    def to_list(self):
        return [str(self.t1), str(self.t2)]


class Weight(NamedTuple):
    """Weight ``(k1, k2)`` of the line ``k1*t1 + k2*t2 = 1``."""

    kappa1: Fraction
    kappa2: Fraction

    def degree(self, point):
        return self.kappa1 * point[0] + self.kappa2 * point[1]

    def swapped(self):
        return Weight(self.kappa2, self.kappa1)

    @property
    def homogeneous_distance(self):
        return 1 / (self.kappa1 + self.kappa2)

    def to_list(self):
        return [str(self.kappa1), str(self.kappa2)]


@dataclass(frozen=True)
class Face:
    kind: str
    endpoints: tuple
    weight: Optional[Weight] = None

    def contains(self, point):
        t1, t2 = point
        if self.kind == VERTEX:
            return tuple(point) == tuple(self.endpoints[0])
        if self.kind == HORIZONTAL_EDGE:
            start = self.endpoints[0]
            return t2 == start.t2 and t1 >= start.t1
        if self.kind == VERTICAL_EDGE:
            start = self.endpoints[0]
            return t1 == start.t1 and t2 >= start.t2
        left, right = self.endpoints
        return left.t1 <= t1 <= right.t1 and self.weight.degree(point) == 1

    def to_dict(self):
        return {
            "kind": self.kind,
            "endpoints": [p.to_list() for p in self.endpoints],
            "weight": self.weight.to_list() if self.weight else None,
        }


class PrincipalFace(NamedTuple):
    """Principal face with its weight in the ``kappa1 <= kappa2`` convention."""

    face: Face
    weight: Optional[Weight]
    swapped: bool


class EdgeEntry(NamedTuple):
    index: int
    weight: Weight
    slope_reciprocal: Union[Fraction, float]  # math.inf for the horizontal edge


@dataclass(frozen=True)
class NewtonPolyhedron:
    vertices: tuple
    compact_edges: tuple
    unbounded_edges: tuple
    support: tuple = field(default=(), compare=False)

    def contains(self, point):
        t1, t2 = point
        if t1 < self.vertices[0].t1 or t2 < self.vertices[-1].t2:
            return False
        return all(edge.weight.degree(point) >= 1 for edge in self.compact_edges)

    @property
    def horizontal_edge(self):
        return self.unbounded_edges[1]

    @property
    def vertical_edge(self):
        return self.unbounded_edges[0]

    def to_dict(self):
        return {
            "vertices": [v.to_list() for v in self.vertices],
            "compactEdges": [e.to_dict() for e in self.compact_edges],
            "unboundedEdges": [e.to_dict() for e in self.unbounded_edges],
        }


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _staircase(points):
    """Pareto-minimal points of the support, ordered by increasing t1."""
    stairs = []
    for point in sorted(points):
        if not stairs or point[1] < stairs[-1][1]:
            stairs.append(point)
    return stairs


def _edge_weight(left, right):
    det = left.t1 * right.t2 - right.t1 * left.t2
    return Weight(Fraction(right.t2 - left.t2) / det, Fraction(left.t1 - right.t1) / det)


def build_polyhedron(phi):
    """
    Build the Newton polyhedron of ``phi`` at the origin.

    Vertices come from a monotone-chain lower hull over the Pareto staircase of the
    support, with exact cross products; collinear points are dropped.

    :param phi: Nonzero BivariatePolynomial.
    :return: NewtonPolyhedron.
    :raises PreconditionError: If ``phi`` is the zero polynomial.
    """
    if phi.is_zero():
        raise PreconditionError("The Newton polyhedron of the zero polynomial is undefined")

    hull = []
    for point in _staircase(phi.support()):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) <= 0:
            hull.pop()
        hull.append(point)

    vertices = tuple(ExponentPoint(Fraction(a), Fraction(b)) for a, b in hull)
    edges = tuple(
        Face(COMPACT_EDGE, (left, right), _edge_weight(left, right))
        for left, right in zip(vertices, vertices[1:])
    )
    first, last = vertices[0], vertices[-1]
    horizontal_weight = Weight(Fraction(0), 1 / last.t2) if last.t2 > 0 else None
    unbounded = (
        Face(VERTICAL_EDGE, (first,)),
        Face(HORIZONTAL_EDGE, (last,), horizontal_weight),
    )
    logger.debug(f"Newton polyhedron of {phi}: vertices {[tuple(map(str, v)) for v in vertices]}")
    return NewtonPolyhedron(vertices, edges, unbounded, tuple(phi.support()))


def newton_distance(polyhedron):
    """Coordinate ``d`` of the point where the bisectrix leaves the polyhedron."""
    candidates = [polyhedron.vertices[0].t1, polyhedron.vertices[-1].t2]
    candidates.extend(edge.weight.homogeneous_distance for edge in polyhedron.compact_edges)
    return max(candidates)


def principal_face(polyhedron):
    """
    Minimal face containing ``(d, d)``.

    The weight is normalized to ``kappa1 <= kappa2``; ``swapped`` records whether the
    coordinates have to be exchanged for that. A vertical principal edge is reported
    with the weight of the horizontal edge it becomes after the exchange.
    """
    d = newton_distance(polyhedron)
    point = ExponentPoint(d, d)
    for vertex in polyhedron.vertices:
        if vertex == point:
            return PrincipalFace(Face(VERTEX, (vertex,)), None, False)
    for edge in polyhedron.compact_edges:
        if edge.contains(point):
            weight = edge.weight
            if weight.kappa1 > weight.kappa2:
                return PrincipalFace(edge, weight.swapped(), True)
            return PrincipalFace(edge, weight, False)
    horizontal = polyhedron.horizontal_edge
    if horizontal.contains(point):
        return PrincipalFace(horizontal, horizontal.weight, False)
    vertical = polyhedron.vertical_edge
    return PrincipalFace(vertical, Weight(Fraction(0), 1 / vertical.endpoints[0].t1), True)


def kappa_principal_part(phi, kappa):
    """
    Sum of the terms of ``phi`` on the line ``kappa1*t1 + kappa2*t2 = 1``.

    :raises PreconditionError: If that line does not support the Newton polyhedron.
    """
    lowest = min(kappa.degree(m) for m in phi.support())
    if lowest != 1:
        raise PreconditionError(
            f"Weight ({kappa.kappa1}, {kappa.kappa2}) does not support the Newton polyhedron "
            f"of {phi} (minimal weighted degree {lowest})"
        )
    return phi.filter_terms(lambda m: kappa.degree(m) == 1)


def edge_sequence(polyhedron):
    """Compact edges with their weights and ``a_l = kappa2/kappa1``, then the horizontal edge."""
    entries = [
        EdgeEntry(index, edge.weight, edge.weight.kappa2 / edge.weight.kappa1)
        for index, edge in enumerate(polyhedron.compact_edges, start=1)
    ]
    horizontal = polyhedron.horizontal_edge
    if horizontal.weight is not None and horizontal.endpoints[0].t2 >= 1:
        entries.append(EdgeEntry(len(entries) + 1, horizontal.weight, math.inf))
    return entries
