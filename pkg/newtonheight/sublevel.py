import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from newtonheight.adaptation import height
from newtonheight.config import (
    CUTOFF_RADIUS,
    KNAPP_SAMPLES,
    KNAPP_UNIT_SCALE,
    MC_SAMPLES,
    REFINE_FACTOR,
    SEED,
    SUBLEVEL_BUDGET,
    SUBLEVEL_GRID,
    TREND_TOLERANCE,
)
from newtonheight.errors import PipelineError, PreconditionError
from newtonheight.numerics import CompiledPhase
from newtonheight.oscillatory import FitResult

logger = logging.getLogger(__name__)

_CHUNK_CELLS = 2**20
_NEWTON_ITERATIONS = 60


@dataclass(frozen=True)
class SublevelEstimate:
    epsilon: float
    measure: float
    standard_error: float
    method: str  # "grid" or "monte-carlo"

    def to_row(self):
        return {"epsilon": self.epsilon, "measure": self.measure, "stderr": self.standard_error}


@dataclass(frozen=True)
class KnappBox:
    edge: object  # edge index, "horizontal" or "principal"
    epsilon: float
    half_width1: float
    half_width2: float
    jet: object
    sup_phi: float
    lower_bound_pc_prime: Fraction

    @property
    def ratio(self):
        return self.sup_phi / self.epsilon

    def to_row(self):
        return {"epsilon": self.epsilon, "supPhi": self.sup_phi}

    def to_dict(self):
        return {
            "edge": self.edge,
            "epsilon": self.epsilon,
            "halfWidths": [self.half_width1, self.half_width2],
            "jet": self.jet.to_list(),
            "supPhi": self.sup_phi,
            "lowerBoundPcPrime": str(self.lower_bound_pc_prime),
        }


@dataclass(frozen=True)
class IntegrabilityVerdict:
    p: Fraction
    predicted_convergent: bool
    boundary: bool
    numeric_trend: str  # "convergent", "divergent" or "inconclusive"
    trend_slope: float
    shell_terms: tuple

    def to_dict(self):
        return {
            "p": str(self.p),
            "predictedConvergent": self.predicted_convergent,
            "boundary": self.boundary,
            "numericTrend": self.numeric_trend,
            "trendSlope": self.trend_slope,
            "shellTerms": [list(term) for term in self.shell_terms],
        }


class _GradientSlack:
    """Bound of ``|phi(x) - phi(c)|`` over a cell of half-diagonal ``rho`` around ``c``."""

    def __init__(self, phi, r):
        self.d1 = CompiledPhase(phi.partial_derivative(1, 0))
        self.d2 = CompiledPhase(phi.partial_derivative(0, 1))
        hessian = [phi.partial_derivative(2, 0), phi.partial_derivative(1, 1), phi.partial_derivative(0, 2)]
        # Frobenius bound of the Hessian over the square, from absolute coefficient sums.
        bounds = [sum(abs(float(c)) * r ** (a1 + a2) for (a1, a2), c in h.terms.items()) for h in hessian]
        self.curvature = math.sqrt(bounds[0] ** 2 + 2 * bounds[1] ** 2 + bounds[2] ** 2)

    def __call__(self, x1, x2, rho):
        gradient = np.hypot(self.d1(x1, x2), self.d2(x1, x2))
        return gradient * rho + 0.5 * self.curvature * rho**2


def _grid_measures(phi, r, epsilons, n, refine):
    compiled = CompiledPhase(phi)
    slack_of = _GradientSlack(phi, r)
    step = 2 * r / n
    rho = step / math.sqrt(2)
    centers = -r + step * (np.arange(n) + 0.5)
    offsets = step * ((np.arange(refine) + 0.5) / refine - 0.5)
    rows = max(1, _CHUNK_CELLS // n)

    inside = np.zeros(len(epsilons))
    fractions = np.zeros(len(epsilons))
    boundary_cells = np.zeros(len(epsilons))
    for start in range(0, n, rows):
        x1 = centers[start:start + rows][:, None]
        x2 = centers[None, :]
        values = np.abs(compiled(x1, x2))
        slack = slack_of(x1, x2, rho)
        X1, X2 = np.broadcast_arrays(x1, x2)
        for k, eps in enumerate(epsilons):
            inside[k] += np.count_nonzero(values + slack < eps)
            edge = (values - slack < eps) & (values + slack >= eps)
            count = np.count_nonzero(edge)
            if not count:
                continue
            boundary_cells[k] += count
            sub1 = X1[edge][:, None, None] + offsets[None, :, None]
            sub2 = X2[edge][:, None, None] + offsets[None, None, :]
            fractions[k] += np.count_nonzero(np.abs(compiled(sub1, sub2)) < eps) / refine**2

    area = step * step
    return [
        SublevelEstimate(float(eps), float((inside[k] + fractions[k]) * area),
                         float(max(math.sqrt(boundary_cells[k]), 1.0) * area / refine), "grid")
        for k, eps in enumerate(epsilons)
    ]


def _monte_carlo_measures(phi, r, epsilons, samples, seed):
    compiled = CompiledPhase(phi)
    rng = np.random.default_rng(seed)
    values = np.concatenate([
        np.abs(compiled(*(rng.uniform(-r, r, size=(2, min(_CHUNK_CELLS, samples - start))))))
        for start in range(0, samples, _CHUNK_CELLS)
    ])
    values.sort()
    square = (2 * r) ** 2
    estimates = []
    for eps in epsilons:
        fraction = np.searchsorted(values, eps, side="left") / samples
        error = square * math.sqrt(fraction * (1 - fraction) / samples) if 0 < fraction < 1 else square / samples
        estimates.append(SublevelEstimate(float(eps), float(square * fraction), float(error), "monte-carlo"))
    return estimates


def sublevel_measures(
    phi,
    r=CUTOFF_RADIUS,
    epsilons=(),
    budget=SUBLEVEL_BUDGET,
    grid=SUBLEVEL_GRID,
    refine=REFINE_FACTOR,
    mc_samples=MC_SAMPLES,
    seed=SEED,
):
    """
    Measures of ``{x in [-r, r]**2 : |phi(x)| < eps}`` for several ``eps`` sharing one pass.

    A ``grid x grid`` cell count is used, with cells that may straddle the level set
    resampled on a ``refine x refine`` sub-grid. Beyond ``budget`` cells the estimate
    falls back to seeded Monte-Carlo sampling.
    """
    epsilons = [float(eps) for eps in epsilons]
    if any(eps <= 0 for eps in epsilons):
        raise PreconditionError("Sublevel thresholds must be positive")
    if grid * grid > budget:
        logger.warning(f"Grid {grid}^2 exceeds the budget {budget}; using {mc_samples} Monte-Carlo samples")
        return _monte_carlo_measures(phi, r, epsilons, mc_samples, seed)
    return _grid_measures(phi, r, epsilons, grid, refine)


def sublevel_measure(phi, r, epsilon, budget=SUBLEVEL_BUDGET, **options):
    return sublevel_measures(phi, r, [epsilon], budget, **options)[0]


def dyadic_grid(low_exponent, high_exponent):
    return [2.0**k for k in range(low_exponent, high_exponent + 1)]


def sublevel_fit(phi, r, eps_grid, log_power=0, **options):
    """
    Fit the growth exponent of ``|{|phi| < eps}|`` over a grid spanning at least three decades.

    The model is ``C * eps**sigma * log(1/eps)**log_power`` with ``log_power`` held fixed
    (the Varchenko exponent from the exact pipeline).
    """
    eps_grid = sorted(float(eps) for eps in eps_grid)
    if len(eps_grid) < 3 or math.log10(eps_grid[-1] / eps_grid[0]) < 3:
        raise PreconditionError(f"Threshold grid {eps_grid[0]}..{eps_grid[-1]} spans fewer than 3 decades")
    estimates = sublevel_measures(phi, r, eps_grid, **options)
    eps = np.array(eps_grid)
    measures = np.array([e.measure for e in estimates])
    if np.any(measures <= 0):
        raise PreconditionError("Sublevel measure vanished on the grid; refine the grid or raise the thresholds")
    log_eps = np.log(eps)
    target = np.log(measures) - log_power * np.log(-log_eps)
    sigma, intercept = np.polyfit(log_eps, target, 1)
    residual = float(np.sqrt(np.mean((target - (sigma * log_eps + intercept)) ** 2)))
    fit = FitResult(
        slope=float(sigma),
        log_power=float(log_power),
        residual=residual,
        samples=tuple(zip(eps.tolist(), measures.tolist())),
        fixed_log_power=int(log_power),
        evaluations=tuple(estimates),
    )
    logger.info(f"Sublevel fit for {phi}: sigma {fit.slope:.4f} (log power {log_power})")
    return fit


def closed_form_product_measure(epsilon, r):
    """Exact measure of ``{|x1^2 x2^2| < eps}`` in ``[-r, r]**2`` for ``sqrt(eps) < r**2``."""
    delta = math.sqrt(epsilon)
    return 4 * (delta + delta * math.log(r * r / delta))


def _knapp_geometry(report, adaptation, edge):
    if not adaptation.jet:
        raise PreconditionError("Knapp boxes apply to phases without linearly adapted coordinates")
    if edge == "principal":
        return adaptation.principal_weight, 2 * report.d_linear + 2
    for invariant in report.edge_invariants:
        matches = invariant.a == math.inf if edge == "horizontal" else invariant.index == edge
        if matches:
            if invariant.h is None:
                raise PreconditionError(f"Edge {edge} has a_l = {invariant.a} <= m = {report.m}; not eligible")
            return invariant.weight, 2 * invariant.h + 2
    raise PreconditionError(f"No edge '{edge}' on the adapted Newton polyhedron")


def _branch_root(branch, y1, iterations=_NEWTON_ITERATIONS):
    """Real root ``psi(y1)`` of ``branch(y1, .)`` near zero by Newton's method; NaN where it fails."""
    g = CompiledPhase(branch)
    slope = CompiledPhase(branch.partial_derivative(0, 1))
    psi = np.zeros_like(y1)
    with np.errstate(all="ignore"):
        for _ in range(iterations):
            psi = psi - g(y1, psi) / slope(y1, psi)
        residual = np.abs(g(y1, psi))
    return np.where(residual <= 1e-12, psi, np.nan)


def knapp_box(report, adaptation, edge, epsilon, samples=KNAPP_SAMPLES, unit_scale=KNAPP_UNIT_SCALE):
    """
    Box ``|x1| <= eps**kappa1, |x2 - psi(x1)| <= eps**kappa2`` for an eligible edge weight.

    ``edge`` is an edge index, ``"horizontal"`` or ``"principal"`` (the principal line, giving
    the bound ``2d + 2``). ``supPhi`` is the largest ``|phi|`` over a dense tensor sample of
    the box, evaluated in adapted coordinates. For an analytic-branch adaptation ``psi`` is
    solved numerically, and the ``x1`` half-width is halved until the branch is real on it.

    :raises PreconditionError: If the phase is linearly adaptable or the edge is not eligible.
    """
    weight, bound = _knapp_geometry(report, adaptation, edge)
    w1 = unit_scale if weight.kappa1 == 0 else epsilon ** float(weight.kappa1)
    w2 = epsilon ** float(weight.kappa2)
    side = max(2, int(math.isqrt(samples)))
    y1 = np.linspace(-w1, w1, side)
    y2 = np.linspace(-w2, w2, side)[None, :]
    if adaptation.branch is None:
        phase = CompiledPhase(adaptation.adapted_polynomial)
        offset = np.zeros_like(y1)
    else:
        phase = CompiledPhase(adaptation.sheared)
        offset = _branch_root(adaptation.branch, y1)
        while not np.all(np.isfinite(offset)):
            if w1 < 1e-6:
                raise PipelineError(f"Branch {adaptation.branch} = 0 has no real root near the origin")
            w1 /= 2
            y1 = np.linspace(-w1, w1, side)
            offset = _branch_root(adaptation.branch, y1)
        logger.debug(f"Knapp box on the branch {adaptation.branch} = 0 uses |y1| <= {w1}")
    values = phase(y1[:, None], offset[:, None] + y2)
    sup_phi = float(np.max(np.abs(values)))
    return KnappBox(edge, float(epsilon), float(w1), float(w2), adaptation.jet, sup_phi, bound)


def knapp_sequence(report, adaptation, edge, eps_grid, **options):
    """Knapp boxes over a threshold sequence with the range ``[c1, c2]`` of ``supPhi/eps``."""
    boxes = [knapp_box(report, adaptation, edge, eps, **options) for eps in eps_grid]
    ratios = [box.ratio for box in boxes]
    return boxes, (min(ratios), max(ratios))


def iosevich_sawyer_check(phi, r, p, eps_grid, h=None, trend_tolerance=TREND_TOLERANCE, **options):
    """
    Integrability of ``|phi|**(-1/p)`` near the origin (the tangent-plane distance).

    The prediction is exact: convergent iff ``1/p < 1/h``, with ``p = h`` reported as a
    divergent boundary case. The numeric trend is the slope of ``log2`` of the dyadic shell
    terms ``|{2^-k <= |phi| < 2^-k+1}| * 2^(k/p)`` against ``k``.
    """
    p = Fraction(p)
    if p <= 1:
        raise PreconditionError(f"Exponent p must exceed 1, got {p}")
    h = Fraction(h) if h is not None else height(phi).h
    predicted = 1 / p < 1 / h
    boundary = p == h

    eps_grid = sorted(float(eps) for eps in eps_grid)
    estimates = sublevel_measures(phi, r, eps_grid, **options)
    terms = []
    for lower, upper in zip(estimates, estimates[1:]):
        k = -math.log2(lower.epsilon)
        shell = upper.measure - lower.measure
        if shell > 0:
            terms.append((k, shell * 2 ** (k / float(p))))
    if len(terms) >= 2:
        ks = np.array([k for k, _ in terms])
        slope = float(np.polyfit(ks, np.log2([t for _, t in terms]), 1)[0])
    else:
        slope = 0.0
    if slope < -trend_tolerance:
        trend = "convergent"
    elif slope > trend_tolerance:
        trend = "divergent"
    else:
        trend = "inconclusive"
    verdict = IntegrabilityVerdict(p, predicted, boundary, trend, slope, tuple(terms))
    logger.info(f"Integrability of |{phi}|^(-1/{p}): predicted {'convergent' if predicted else 'divergent'}, numeric {trend}")
    return verdict
