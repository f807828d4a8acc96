import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

from newtonheight.config import MAX_LINEAR_STEPS, MAX_STEPS
from newtonheight.errors import (
    AdaptationLimitError,
    IrrationalRootError,
    PipelineError,
    PreconditionError,
)
from newtonheight.homogeneous import circle_order, factorize_homogeneous
from newtonheight.newton import (
    COMPACT_EDGE,
    HORIZONTAL_EDGE,
    VERTEX,
    VERTICAL_EDGE,
    build_polyhedron,
    kappa_principal_part,
    newton_distance,
    principal_face,
)
from newtonheight.polynomial import BivariatePolynomial, JetTerm, from_sympy, to_sympy

logger = logging.getLogger(__name__)

CONDITION_BY_KIND = {VERTEX: "b", HORIZONTAL_EDGE: "c", VERTICAL_EDGE: "c"}


@dataclass(frozen=True)
class AdaptednessVerdict:
    adapted: bool
    condition: str  # "a", "b", "c" or "none"
    principal_face: object
    distance: Fraction
    circle_order: Optional[int] = None
    weight: Optional[object] = None  # principal weight in the kappa1 <= kappa2 convention
    swapped: bool = False

    @property
    def integer_m(self):
        """``kappa2/kappa1`` when the principal face is a compact edge and the ratio is an integer."""
        if self.principal_face.kind != COMPACT_EDGE:
            return None
        ratio = self.weight.kappa2 / self.weight.kappa1
        return int(ratio) if ratio.denominator == 1 else None

    def to_dict(self):
        return {
            "adapted": self.adapted,
            "condition": self.condition,
            "principalFace": self.principal_face.to_dict(),
            "distance": str(self.distance),
            "circleOrder": self.circle_order,
        }


@dataclass(frozen=True)
class RootJet:
    terms: tuple = ()

    def __post_init__(self):
        exponents = [term.exponent for term in self.terms]
        if any(b <= a for a, b in zip(exponents, exponents[1:])):
            raise PipelineError(f"Root jet exponents must strictly increase, got {exponents}")

    @property
    def leading_exponent(self):
        return self.terms[0].exponent if self.terms else None

    def __bool__(self):
        return bool(self.terms)

    def __call__(self, x1):
        return sum(term.coefficient * x1**term.exponent for term in self.terms)

    def as_polynomial(self):
        return BivariatePolynomial({(t.exponent, 0): t.coefficient for t in self.terms})

    def __str__(self):
        return str(self.as_polynomial())

    def to_list(self):
        return [term.to_dict() for term in self.terms]


class StepRecord(NamedTuple):
    coefficient: Fraction
    exponent: int
    distance: Fraction

    def to_dict(self):
        return {"coefficient": str(self.coefficient), "exponent": self.exponent, "distance": str(self.distance)}


class LinearNormalization(NamedTuple):
    polynomial: BivariatePolynomial
    shear: Optional[JetTerm]
    swapped: bool


@dataclass(frozen=True)
class AdaptationResult:
    original: BivariatePolynomial
    original_adapted: bool
    swapped: bool
    linear_shear: Optional[JetTerm]
    normalized: BivariatePolynomial
    jet: RootJet
    adapted_polynomial: BivariatePolynomial
    step_log: tuple
    m: Optional[int]
    linear_distance: Fraction
    principal_weight: Optional[object]
    verdict: AdaptednessVerdict = field(compare=False, default=None)
    # Set when adaptation ends on an analytic branch: the adapted coordinate is
    # y2 - psi(y1) with psi the root of ``branch`` in the ``sheared`` coordinates.
    branch: Optional[BivariatePolynomial] = None
    sheared: Optional[BivariatePolynomial] = None

    def to_dict(self):
        return {
            "originalAdapted": self.original_adapted,
            "swapped": self.swapped,
            "linearShear": self.linear_shear.to_dict() if self.linear_shear else None,
            "normalizedPolynomial": str(self.normalized),
            "rootJet": self.jet.to_list(),
            "adaptedPolynomial": str(self.adapted_polynomial),
            "stepLog": [record.to_dict() for record in self.step_log],
            "m": self.m,
            "linearDistance": str(self.linear_distance),
            "analyticBranch": str(self.branch) if self.branch is not None else None,
        }


@dataclass(frozen=True)
class HeightData:
    h: Fraction
    nu: int
    d_original: Fraction
    vertex_polynomial: Optional[BivariatePolynomial] = None

    def to_dict(self):
        return {
            "h": str(self.h),
            "nu": self.nu,
            "dOriginal": str(self.d_original),
            "vertexPolynomial": str(self.vertex_polynomial) if self.vertex_polynomial is not None else None,
        }


def _require_finite_type(phi):
    if phi.is_zero():
        raise PreconditionError("The phase must be a nonzero polynomial")
    for monomial in ((0, 0), (1, 0), (0, 1)):
        if phi.coefficient(*monomial) != 0:
            raise PreconditionError(
                f"{phi} has a nonzero value or gradient at the origin (term x1^{monomial[0]}*x2^{monomial[1]})"
            )


def check_adapted(phi):
    """
    Decide whether the coordinates are adapted to ``phi``.

    The coordinates are adapted iff the principal face is a compact edge whose principal
    part vanishes on the unit circle to order at most ``d`` (a), or a vertex (b), or an
    unbounded edge (c).

    :raises PreconditionError: If ``phi`` is zero or has a constant or linear part.
    """
    _require_finite_type(phi)
    polyhedron = build_polyhedron(phi)
    distance = newton_distance(polyhedron)
    principal = principal_face(polyhedron)
    face = principal.face
    if face.kind != COMPACT_EDGE:
        return AdaptednessVerdict(
            True, CONDITION_BY_KIND[face.kind], face, distance, None, principal.weight, principal.swapped
        )

    order = circle_order(kappa_principal_part(phi, face.weight), face.weight)
    adapted = order <= distance
    return AdaptednessVerdict(
        adapted, "a" if adapted else "none", face, distance, order, principal.weight, principal.swapped
    )


def _principal_root(phi, verdict, threshold, strict=True):
    """Real root of the principal part with multiplicity above (or equal to) ``threshold``."""
    weight = verdict.weight
    factorization = factorize_homogeneous(kappa_principal_part(phi, weight), weight)
    if strict:
        candidates = [r for r in factorization.roots if r.is_real and r.multiplicity > threshold]
    else:
        candidates = [r for r in factorization.roots if r.is_real and r.multiplicity == threshold]
    if not candidates:
        raise PipelineError(f"No real root of the principal part of {phi} with multiplicity > {threshold}")
    if strict and len(candidates) > 1:
        raise PipelineError(f"Principal part of {phi} has {len(candidates)} roots of multiplicity > {threshold}")
    root = candidates[0]
    if not root.is_rational:
        raise IrrationalRootError(
            f"Principal root of {phi} is irrational, isolated in [{root.interval[0]}, {root.interval[1]}]",
            root.interval,
        )
    return root.value


def linearly_adapt(phi, max_linear_steps=MAX_LINEAR_STEPS):
    """
    Normalize ``phi`` by a coordinate swap and degree-one shears.

    The result is either adapted, or not adapted with an integer ``m = kappa2/kappa1 >= 2``.

    :return: LinearNormalization(polynomial, shear, swapped); the swap is applied first.
    :raises AdaptationLimitError: If more than ``max_linear_steps`` shears are needed.
    """
    current = phi
    swapped = False
    shear = Fraction(0)
    for _ in range(max_linear_steps + 1):
        verdict = check_adapted(current)
        if verdict.adapted:
            break
        if verdict.swapped:
            if swapped or shear:
                raise PipelineError(f"{current} needs a second coordinate swap during linear normalization")
            logger.info(f"Swapping coordinates of {current} (kappa1 > kappa2)")
            current = current.swap()
            swapped = True
            continue
        if verdict.integer_m != 1:
            break
        b = _principal_root(current, verdict, verdict.distance)
        logger.info(f"Linear shear x2 -> x2 + {b}*x1 on {current}")
        current = current.shear_substitute([JetTerm(b, 1)])
        shear += b
    else:
        raise AdaptationLimitError(f"Linear normalization of {phi} exceeded {max_linear_steps} steps", [])

    return LinearNormalization(current, JetTerm(shear, 1) if shear else None, swapped)


def varchenko_step(phi):
    """
    One step of Varchenko's algorithm: shear away the principal root.

    :param phi: Non-adapted polynomial with integer ``m = kappa2/kappa1 >= 2`` and ``kappa1 <= kappa2``.
    :return: (JetTerm(b, m), phi(y1, y2 + b*y1**m)).
    :raises PreconditionError: If ``phi`` is adapted or ``m`` is not an integer of at least 2.
    :raises IrrationalRootError: If the principal root is not rational.
    :raises PipelineError: If the distance fails to increase.
    """
    verdict = check_adapted(phi)
    if verdict.adapted:
        raise PreconditionError(f"{phi} is already adapted (condition {verdict.condition})")
    m = verdict.integer_m
    if verdict.swapped or m is None or m < 2:
        raise PreconditionError(f"Varchenko step needs an integer m >= 2 with kappa1 <= kappa2 for {phi}")

    b = _principal_root(phi, verdict, verdict.distance)
    term = JetTerm(b, m)
    sheared = phi.shear_substitute([term])
    new_distance = newton_distance(build_polyhedron(sheared))
    if new_distance <= verdict.distance:
        raise PipelineError(
            f"Shear by {b}*x1^{m} did not increase the distance ({verdict.distance} -> {new_distance})"
        )
    logger.info(f"Varchenko step b={b}, m={m}: distance {verdict.distance} -> {new_distance}")
    return term, sheared


def analytic_branch(phi, verdict=None):
    """
    Smooth factor ``g`` with ``phi = g**B * unit`` whose root is not a polynomial in ``y1``.

    Applies when the principal part is a single repeated factor ``c*(y2 - b*y1**m)**B``. The
    root ``y2 = psi(y1)`` of ``g`` is then an infinite series, so shearing by jet terms never
    terminates, while in the analytic coordinate ``y2 - psi(y1)`` the phase is ``y2**B``
    times a unit.

    :return: The factor ``g`` as a BivariatePolynomial, or None.
    """
    verdict = verdict or check_adapted(phi)
    if verdict.adapted or verdict.swapped or verdict.principal_face.kind != COMPACT_EDGE:
        return None
    factorization = factorize_homogeneous(kappa_principal_part(phi, verdict.weight), verdict.weight)
    if factorization.q != 1 or factorization.trivial_order1 or factorization.trivial_order2:
        return None
    if len(factorization.roots) != 1:
        return None
    multiplicity = factorization.roots[0].multiplicity

    _, components = to_sympy(phi).sqf_list()
    through_origin = []
    for component, exponent in components:
        component = from_sympy(component, phi.max_degree)
        if component.coefficient(0, 0) == 0:
            through_origin.append((component, exponent))
    if len(through_origin) != 1:
        return None
    branch, exponent = through_origin[0]
    if exponent != multiplicity or branch.coefficient(0, 1) == 0:
        return None
    if branch.degree_in(2) == 1 and all(a1 == 0 for a1, a2 in branch.support() if a2 == 1):
        # y2 - f(y1) with f polynomial: finitely many shears reach y2**B
        return None
    return branch


def adapt_coordinates(phi, max_steps=MAX_STEPS, max_linear_steps=MAX_LINEAR_STEPS):
    """
    Construct adapted coordinates for ``phi``.

    Runs :func:`linearly_adapt` and then :func:`varchenko_step` until the principal face
    passes :func:`check_adapted`. When the remaining root is an analytic branch
    (:func:`analytic_branch`) the loop stops after its first term; the adapted polynomial
    is then the model ``c*y2**B``, which has the Newton polyhedron and principal parts of
    the phase in analytic adapted coordinates.

    :return: AdaptationResult; ``jet`` excludes the linear shear.
    :raises AdaptationLimitError: After ``max_steps`` steps, carrying the partial step log.
    """
    _require_finite_type(phi)
    original_adapted = check_adapted(phi).adapted
    normalization = linearly_adapt(phi, max_linear_steps)
    normalized = normalization.polynomial
    start = check_adapted(normalized)

    current = normalized
    terms = []
    log = []
    verdict = start
    branch = None
    sheared = None
    for _ in range(max_steps):
        if verdict.adapted:
            break
        if terms:
            branch = analytic_branch(current, verdict)
            if branch is not None:
                sheared = current
                power = int(verdict.principal_face.endpoints[0].t2)
                current = BivariatePolynomial.monomial(sheared.coefficient(0, power), 0, power)
                verdict = check_adapted(current)
                logger.info(f"Remaining root of {sheared} is the analytic branch {branch} = 0 of order {power}")
                break
        term, current = varchenko_step(current)
        if terms and term.exponent <= terms[-1].exponent:
            raise PipelineError(f"Jet exponent {term.exponent} does not exceed {terms[-1].exponent}")
        terms.append(term)
        verdict = check_adapted(current)
        log.append(StepRecord(term.coefficient, term.exponent, verdict.distance))
    else:
        if not verdict.adapted:
            raise AdaptationLimitError(f"Adaptation of {phi} exceeded {max_steps} steps", log)

    m = terms[0].exponent if terms else start.integer_m
    result = AdaptationResult(
        original=phi,
        original_adapted=original_adapted,
        swapped=normalization.swapped,
        linear_shear=normalization.shear,
        normalized=normalized,
        jet=RootJet(tuple(terms)),
        adapted_polynomial=current,
        step_log=tuple(log),
        m=m,
        linear_distance=start.distance,
        principal_weight=start.weight,
        verdict=verdict,
        branch=branch,
        sheared=sheared,
    )
    logger.info(f"Adapted {phi}: jet {result.jet or 0}, adapted polynomial {current}")
    return result


def height(phi, adaptation=None):
    """
    Height ``h`` and Varchenko exponent ``nu`` of ``phi``.

    ``nu = 1`` iff ``h >= 2`` and, in adapted coordinates, the principal face is a vertex or
    a compact edge whose principal part vanishes on the circle to order exactly ``h``. In
    the edge case one more shear is tried to exhibit the vertex form.
    """
    adaptation = adaptation or adapt_coordinates(phi)
    d_original = newton_distance(build_polyhedron(phi))
    verdict = adaptation.verdict
    h = verdict.distance
    nu = 0
    vertex_polynomial = None
    if h >= 2:
        kind = verdict.principal_face.kind
        if kind == VERTEX:
            nu = 1
            vertex_polynomial = adaptation.adapted_polynomial
        elif kind == COMPACT_EDGE and verdict.circle_order == h:
            nu = 1
            vertex_polynomial = _vertex_form(adaptation.adapted_polynomial, verdict)
    data = HeightData(h, nu, d_original, vertex_polynomial)
    logger.info(f"Height of {phi}: h={h}, nu={nu}")
    return data


def _vertex_form(phi, verdict):
    """Shear by the root of multiplicity exactly ``d``; returns None when that is not possible."""
    polynomial = phi.swap() if verdict.swapped else phi
    m = verdict.integer_m
    try:
        b = _principal_root(polynomial, verdict, verdict.distance, strict=False)
    except PipelineError as e:
        logger.warning(f"No rational root of multiplicity {verdict.distance} for the vertex form: {e}")
        return None
    if m is None:
        logger.warning(f"Edge weight of {phi} has non-integer m; vertex form not constructed")
        return None
    sheared = polynomial.shear_substitute([JetTerm(b, m)])
    face = principal_face(build_polyhedron(sheared)).face
    if face.kind != VERTEX or newton_distance(build_polyhedron(sheared)) != verdict.distance:
        logger.warning(f"Extra shear of {phi} reached a {face.kind}, not a vertex")
        return None
    return sheared
