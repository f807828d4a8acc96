"""
Oscillatory integrals ``I(lambda; s) = int exp(i*lambda*(phi(x) + s.x)) eta(x) dx`` and
fits of their decay against ``lambda**(-1/h) * log(lambda)**nu``.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import j0

from newtonheight.config import (
    CUTOFF_RADIUS,
    GAUSS_ORDER,
    MIN_PANELS,
    NODE_BUDGET,
    OVERSAMPLE,
    S_RADIUS,
    S_SAMPLES,
    SEED,
    THREADS,
)
from newtonheight.errors import PreconditionError, QuadratureBudgetError
from newtonheight.numerics import (
    CompiledPhase,
    coarsen,
    compensated_horner,
    greedy_panels,
    map_blocks,
    pairwise_sum,
    panel_nodes,
)

logger = logging.getLogger(__name__)

__all__ = [
    "RADIAL",
    "PRODUCT",
    "CutoffSpec",
    "OscillatoryResult",
    "FitResult",
    "VdcReport",
    "circle_harmonic",
    "oscillatory_integral",
    "decay_fit",
    "log_doubling_ratio",
    "uniform_decay_probe",
    "vdc_probe_1d",
    "geometric_grid",
]

_BLOCK_ELEMENTS = 2**20
_HARMONIC_TOLERANCE = 1e-12

RADIAL = "smooth-bump"
PRODUCT = "product-bump"


def _bump(rho):
    """``exp(1 - 1/(1 - rho))`` for ``rho < 1``, zero elsewhere."""
    inside = rho < 1
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        values = np.exp(1 - 1 / (1 - np.where(inside, rho, 0.0)))
    return np.where(inside, values, 0.0)


@dataclass(frozen=True)
class CutoffSpec:
    """
    Smooth cutoff with ``eta(0) = 1`` supported in ``|x| < r``.

    ``smooth-bump`` is the radial bump ``exp(1 - 1/(1 - |x/r|**2))``; ``product-bump`` is the
    product of the one-dimensional bumps in ``x1`` and ``x2`` (support ``[-r, r]**2``).
    """

    radius: float = CUTOFF_RADIUS
    kind: str = RADIAL

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"Cutoff radius must be positive, got {self.radius}")
        if self.kind not in (RADIAL, PRODUCT):
            raise ValueError(f"Unknown cutoff kind '{self.kind}'")

    def profile(self, t):
        """One-dimensional bump ``exp(1 - 1/(1 - (t/r)**2))``."""
        return _bump(np.asarray(t) ** 2 / self.radius**2)

    def __call__(self, x1, x2=0.0):
        if self.kind == PRODUCT:
            return self.profile(x1) * self.profile(x2)
        return _bump((np.asarray(x1) ** 2 + np.asarray(x2) ** 2) / self.radius**2)

    def mass(self, panels=256, order=GAUSS_ORDER):
        """``int eta dx`` over the plane, by Gauss-Legendre quadrature."""
        if self.kind == PRODUCT:
            nodes, weights = panel_nodes(np.linspace(-self.radius, self.radius, panels + 1), order)
            return float(np.sum(weights * self.profile(nodes)) ** 2)
        nodes, weights = panel_nodes(np.linspace(0.0, self.radius, panels + 1), order)
        return float(2 * math.pi * np.sum(weights * nodes * self(nodes)))

    def to_dict(self):
        return {"radius": self.radius, "kind": self.kind}


@dataclass(frozen=True)
class OscillatoryResult:
    lam: float
    s: tuple
    value: complex
    estimated_error: float
    nodes: int = 0
    method: str = "tensor"  # "tensor", "bessel" or "separable"

    @property
    def magnitude(self):
        return abs(self.value)

    def to_row(self):
        return {
            "lambda": self.lam,
            "s1": self.s[0],
            "s2": self.s[1],
            "reI": self.value.real,
            "imI": self.value.imag,
            "absI": abs(self.value),
            "estErr": self.estimated_error,
        }


@dataclass(frozen=True)
class FitResult:
    """
    Fit of ``log|y| = slope*log(x) + log_power*log(log(x)) + c``.

    ``joint_slope`` and ``log_power`` come from the free two-term fit. When a log power is
    prescribed (``fixed_log_power``), ``slope`` is refitted with that power held fixed;
    otherwise it equals ``joint_slope``.
    """

    slope: float
    log_power: float
    residual: float
    samples: tuple
    inconclusive: bool = False
    fixed_log_power: Optional[int] = None
    joint_slope: Optional[float] = None
    evaluations: tuple = field(default=(), compare=False, repr=False)

    @property
    def detected_log_power(self):
        return 1 if self.log_power > 0.5 else 0

    def within(self, expected, tolerance):
        return abs(self.slope - float(expected)) <= tolerance

    def to_dict(self):
        return {
            "slope": self.slope,
            "jointSlope": self.joint_slope,
            "logPower": self.log_power,
            "fixedLogPower": self.fixed_log_power,
            "residual": self.residual,
            "inconclusive": self.inconclusive,
            "samples": [list(sample) for sample in self.samples],
        }


@dataclass(frozen=True)
class VdcReport:
    n: int
    lower_bound: float
    upper_bound: float
    lambdas: tuple
    ratios: tuple
    sup_ratio: float
    trend: float
    bounded: bool

    def to_dict(self):
        return {
            "n": self.n,
            "c1": self.lower_bound,
            "c2": self.upper_bound,
            "lambdas": list(self.lambdas),
            "ratios": list(self.ratios),
            "supRatio": self.sup_ratio,
            "trend": self.trend,
            "bounded": self.bounded,
        }


def geometric_grid(low, high, ratio=2.0):
    """``low, low*ratio, ...`` up to ``high`` inclusive."""
    count = int(round(math.log(high / low) / math.log(ratio))) + 1
    return [low * ratio**k for k in range(count)]




def _tensor_sum(compiled, cutoff, lam, s, edges1, edges2, order, threads):
    nodes1, weights1 = panel_nodes(edges1, order)
    nodes2, weights2 = panel_nodes(edges2, order)
    rows = max(1, _BLOCK_ELEMENTS // len(nodes2))
    blocks = [slice(start, start + rows) for start in range(0, len(nodes1), rows)]
    x2 = nodes2[None, :]

    def block_sum(block):
        x1 = nodes1[block][:, None]
        phase = compiled(x1, x2) + (s[0] * x1 + s[1] * x2)
        integrand = cutoff(x1, x2) * np.exp(1j * lam * phase)
        return complex(weights1[block] @ (integrand @ weights2))

    return pairwise_sum(map_blocks(block_sum, blocks, threads))


def _line_integral(integrand, low, high, slope_bound, lam, gauss_order, oversample, min_panels, limit):
    """Panel Gauss-Legendre value of a 1D integrand, its coarsened value and the node count."""
    edges = greedy_panels(low, high, slope_bound, abs(lam), oversample, min_panels, limit)

    def total(panel_edges):
        nodes, weights = panel_nodes(panel_edges, gauss_order)
        return complex(pairwise_sum(weights * integrand(nodes)))

    nodes = (len(edges) - 1) * gauss_order
    return total(edges), total(coarsen(edges)), nodes + nodes // 2


def _split(coefficients):
    """Highest-degree-first float parts ``(high, low)`` of exact coefficients."""
    exact = [Fraction(c) for c in coefficients]
    high = [float(c) for c in reversed(exact)]
    low = [float(c - Fraction(float(c))) for c in reversed(exact)]
    return high, low


def _polynomial_line_integral(coefficients, weight, lam, r, gauss_order, oversample, min_panels, limit):
    """``int_{-r}^{r} exp(i*lam*f(t)) weight(t) dt`` for ``f`` given lowest degree first."""
    high, low = _split(coefficients)
    slope_terms = [(abs(float(Fraction(c))) * k, k - 1) for k, c in enumerate(coefficients) if k > 0]

    def slope_bound(a, b):
        m = max(abs(a), abs(b))
        return sum(c * m**p for c, p in slope_terms)

    def integrand(t):
        value, correction = compensated_horner(high, low, t)
        return weight(t) * np.exp(1j * lam * (value + correction))

    return _line_integral(integrand, -r, r, slope_bound, lam, gauss_order, oversample, min_panels, limit)


def circle_harmonic(phi):
    """
    ``(n, A, B)`` when ``phi(r*cos t, r*sin t) = r**n * (A + B*cos(m*t + t0))`` for one ``m``.

    Then, for a radial cutoff, the angular integral is ``2*pi*exp(i*lambda*A*r**n) *
    J0(lambda*B*r**n)``. Returns None for non-homogeneous phases or several harmonics.
    """
    degrees = {a1 + a2 for a1, a2 in phi.support()}
    if len(degrees) != 1:
        return None
    n = degrees.pop()
    samples = 4 * n + 4
    theta = 2 * math.pi * np.arange(samples) / samples
    spectrum = np.fft.rfft(CompiledPhase(phi)(np.cos(theta), np.sin(theta))) / samples
    amplitudes = np.abs(spectrum)
    scale = float(np.max(amplitudes))
    harmonics = [k for k in range(1, len(spectrum)) if amplitudes[k] > _HARMONIC_TOLERANCE * scale]
    if len(harmonics) > 1:
        return None
    amplitude = 2 * float(amplitudes[harmonics[0]]) if harmonics else 0.0
    return n, float(spectrum[0].real), amplitude


def _bessel_integral(harmonic, cutoff, lam, gauss_order, oversample, min_panels, limit):
    n, a, b = harmonic
    speed = (abs(a) + abs(b)) * n

    def integrand(r):
        mu = lam * r**n
        return 2 * math.pi * r * cutoff(r) * np.exp(1j * a * mu) * j0(b * mu)

    def slope_bound(low, high):
        return speed * max(abs(low), abs(high)) ** (n - 1)

    return _line_integral(integrand, 0.0, cutoff.radius, slope_bound, lam, gauss_order, oversample, min_panels, limit)


def _separable_integral(phi, cutoff, lam, s, gauss_order, oversample, min_panels, limit):
    """Product of the two 1D integrals for ``phi = f(x1) + g(x2)`` and a product cutoff."""
    f = [Fraction(0)] * (phi.degree_in(1) + 1)
    g = [Fraction(0)] * (phi.degree_in(2) + 1)
    for (a1, a2), c in phi.terms.items():
        if a2 == 0:
            f[a1] += c
        else:
            g[a2] += c
    f = f + [Fraction(0)] * (2 - len(f))
    g = g + [Fraction(0)] * (2 - len(g))
    f[1] += Fraction(s[0])
    g[1] += Fraction(s[1])
    options = (gauss_order, oversample, min_panels, limit)
    value1, coarse1, nodes1 = _polynomial_line_integral(f, cutoff.profile, lam, cutoff.radius, *options)
    value2, coarse2, nodes2 = _polynomial_line_integral(g, cutoff.profile, lam, cutoff.radius, *options)
    return value1 * value2, coarse1 * coarse2, nodes1 + nodes2


def _reduction(phi, cutoff, s):
    """Name of the exact 1D reduction that applies to ``(phi, cutoff, s)``, if any."""
    if phi.is_zero():
        return None
    if cutoff.kind == PRODUCT and all(a1 == 0 or a2 == 0 for a1, a2 in phi.support()):
        return "separable"
    if cutoff.kind == RADIAL and s == (0.0, 0.0) and circle_harmonic(phi) is not None:
        return "bessel"
    return None


def oscillatory_integral(
    phi,
    cutoff,
    lam,
    s=(0.0, 0.0),
    gauss_order=GAUSS_ORDER,
    oversample=OVERSAMPLE,
    min_panels=MIN_PANELS,
    budget=NODE_BUDGET,
    threads=THREADS,
    estimate_error=True,
    reduce=True,
):
    """
    Evaluate ``I(lambda; s)`` by panel Gauss-Legendre quadrature on ``[-r, r]**2``.

    Panels are sized per axis from an upper bound of the phase slope over the strip they
    cut, so each holds ``gauss_order/oversample`` nodes per local oscillation period. The
    error estimate is the change against the pairwise-merged (coarser) panel set.

    With ``reduce`` the integral collapses to one dimension where this is exact: a
    separable phase under a product cutoff gives a product of line integrals, and a
    single-harmonic homogeneous phase under the radial cutoff (``s = 0``) gives a radial
    Bessel integral (:func:`circle_harmonic`). Both make ``lambda**2``-sized frequencies
    affordable.

    :param lam: Frequency; negative values give the complex conjugate for real phases.
    :raises PreconditionError: If ``lam == 0`` or the cutoff radius exceeds 1.
    :raises QuadratureBudgetError: If more than ``budget`` node evaluations are needed.
    """
    if lam == 0:
        raise PreconditionError("Frequency must be nonzero")
    if cutoff.radius > 1:
        raise PreconditionError(f"Cutoff radius {cutoff.radius} exceeds 1")
    s = (float(s[0]), float(s[1]))
    r = cutoff.radius
    frequency = abs(lam)
    limit = max(1, budget // gauss_order)

    method = _reduction(phi, cutoff, s) if reduce else None
    if method is not None:
        options = (gauss_order, oversample, min_panels, limit)
        if method == "separable":
            value, coarse, total = _separable_integral(phi, cutoff, lam, s, *options)
        else:
            value, coarse, total = _bessel_integral(circle_harmonic(phi), cutoff, lam, *options)
        if total > budget:
            raise QuadratureBudgetError(
                f"Integral at lambda={lam} needs {total} node evaluations, budget is {budget}", total, budget
            )
        error = abs(value - coarse) if estimate_error else math.nan
        logger.debug(f"I({lam}; {s}) = {value:.6e} (+/- {error:.2e}) by {method} reduction, {total} nodes")
        return OscillatoryResult(float(lam), s, value, error, total, method)

    compiled = CompiledPhase(phi)
    edges1 = greedy_panels(
        -r, r, lambda a, b: compiled.gradient_bound(0, (a, b), (-r, r)) + abs(s[0]),
        frequency, oversample, min_panels, limit,
    )
    edges2 = greedy_panels(
        -r, r, lambda a, b: compiled.gradient_bound(1, (-r, r), (a, b)) + abs(s[1]),
        frequency, oversample, min_panels, limit,
    )
    nodes = (len(edges1) - 1) * (len(edges2) - 1) * gauss_order**2
    total = nodes + (nodes // 4 if estimate_error else 0)
    if total > budget:
        raise QuadratureBudgetError(
            f"Integral at lambda={lam} needs {total} node evaluations, budget is {budget}", total, budget
        )

    value = _tensor_sum(compiled, cutoff, lam, s, edges1, edges2, gauss_order, threads)
    error = math.nan
    if estimate_error:
        coarse = _tensor_sum(compiled, cutoff, lam, s, coarsen(edges1), coarsen(edges2), gauss_order, threads)
        error = abs(value - coarse)
    logger.debug(f"I({lam}; {s}) = {value:.6e} (+/- {error:.2e}) with {total} nodes")
    return OscillatoryResult(float(lam), s, value, error, total)


def _fit_log_model(xs, ys, log_power=None):
    """
    Free least-squares fit of ``log y = a*log x + b*log log x + c``; with ``log_power``
    the slope is refitted holding ``b = log_power``.

    :return: (slope, joint_slope, joint_log_power, residual, ill_conditioned).
    """
    log_x = np.log(xs)
    loglog_x = np.log(log_x)
    log_y = np.log(ys)
    design = np.column_stack([log_x, loglog_x, np.ones_like(log_x)])
    coefficients, *_ = np.linalg.lstsq(design, log_y, rcond=None)
    ill_conditioned = bool(np.linalg.cond(design) > 1e8)
    joint_slope, joint_power = float(coefficients[0]), float(coefficients[1])
    if log_power is None:
        residual = float(np.sqrt(np.mean((log_y - design @ coefficients) ** 2)))
        return joint_slope, joint_slope, joint_power, residual, ill_conditioned

    target = log_y - log_power * loglog_x
    slope, intercept = np.polyfit(log_x, target, 1)
    residual = float(np.sqrt(np.mean((target - (slope * log_x + intercept)) ** 2)))
    return float(slope), joint_slope, joint_power, residual, ill_conditioned


def _require_span(grid, decades):
    if len(grid) < 3 or math.log10(max(grid) / min(grid)) < decades:
        raise PreconditionError(f"Grid {min(grid)}..{max(grid)} spans fewer than {decades} decades")


def _fit_results(results, log_power):
    lams = np.array([r.lam for r in results])
    magnitudes = np.array([r.magnitude for r in results])
    below_noise = bool(np.any(magnitudes <= np.nan_to_num(np.array([r.estimated_error for r in results]))))
    if np.any(magnitudes == 0):
        below_noise = True
        magnitudes = np.where(magnitudes == 0, np.finfo(float).tiny, magnitudes)
    slope, joint_slope, joint_power, residual, ill_conditioned = _fit_log_model(lams, magnitudes, log_power)
    fit = FitResult(
        slope=slope,
        log_power=joint_power,
        residual=residual,
        samples=tuple(zip(lams.tolist(), magnitudes.tolist())),
        inconclusive=below_noise or ill_conditioned,
        fixed_log_power=log_power,
        joint_slope=joint_slope,
        evaluations=tuple(results),
    )
    if fit.inconclusive:
        logger.warning(f"Decay fit is inconclusive (noise floor {below_noise}, ill-conditioned {ill_conditioned})")
    return fit


def decay_fit(phi, cutoff, lambda_grid, s=(0.0, 0.0), log_power=None, **quadrature):
    """
    Fit the decay of ``|I(lambda; s)|`` over a geometric grid spanning at least two decades.

    The log power always comes from the free two-term fit. Given the expected
    ``log_power`` (the Varchenko exponent), the reported slope is refitted with it held
    fixed, which is the model ``lambda**(-1/h) * log(lambda)**nu`` being checked.
    """
    _require_span(lambda_grid, 2)
    results = [oscillatory_integral(phi, cutoff, lam, s, **quadrature) for lam in sorted(lambda_grid)]
    fit = _fit_results(results, log_power)
    logger.info(f"Decay fit for {phi}: slope {fit.slope:.4f}, log power {fit.log_power:.3f}")
    return fit


def log_doubling_ratio(phi, cutoff, lam, height, **quadrature):
    """
    ``(lambda**2)**(1/h)|I(lambda**2)|`` over ``lambda**(1/h)|I(lambda)|``.

    About 2 when ``nu = 1`` (``log(lambda**2) = 2*log(lambda)``) and 1 when ``nu = 0``. The
    constant next to the logarithm scales with ``log`` of the cutoff radius, so the ratio
    approaches 2 fastest for ``r`` near 1.
    """
    exponent = 1.0 / float(Fraction(height))
    low = oscillatory_integral(phi, cutoff, lam, **quadrature).magnitude
    high = oscillatory_integral(phi, cutoff, lam * lam, **quadrature).magnitude
    return (lam * lam) ** exponent * high / (lam**exponent * low)


def uniform_decay_probe(
    phi,
    cutoff,
    lambda_grid,
    s_radius=S_RADIUS,
    s_samples=S_SAMPLES,
    seed=SEED,
    log_power=None,
    **quadrature,
):
    """
    Worst case over linear perturbations: ``max_s |I(lambda; s)|`` per ``lambda``, then fitted.

    The perturbations are ``s = 0`` and ``s_samples - 1`` seeded uniform draws from the disk
    of radius ``s_radius``.
    """
    _require_span(lambda_grid, 2)
    rng = np.random.default_rng(seed)
    radii = s_radius * np.sqrt(rng.random(s_samples - 1))
    angles = 2 * math.pi * rng.random(s_samples - 1)
    perturbations = [(0.0, 0.0)] + list(zip((radii * np.cos(angles)).tolist(), (radii * np.sin(angles)).tolist()))

    worst = []
    for lam in sorted(lambda_grid):
        results = [oscillatory_integral(phi, cutoff, lam, s, **quadrature) for s in perturbations]
        worst.append(max(results, key=lambda r: r.magnitude))
    fit = _fit_results(worst, log_power)
    logger.info(f"Uniform decay of {phi} over {s_samples} perturbations: worst slope {fit.slope:.4f}")
    return fit


def vdc_probe_1d(
    coefficients,
    cutoff,
    n,
    lambda_grid,
    samples=4097,
    trend_tolerance=0.05,
    gauss_order=GAUSS_ORDER,
    oversample=OVERSAMPLE,
    min_panels=MIN_PANELS,
    budget=NODE_BUDGET,
):
    """
    Check the one-dimensional van der Corput bound ``|int e^{i lambda f} g| <~ (1 + lambda)**(-1/n)``.

    :param coefficients: Coefficients of ``f`` (lowest degree first), exact or float.
    :param cutoff: CutoffSpec used as ``g`` on ``[-r, r]``.
    :raises PreconditionError: If ``sum_{j=2..n} |f^(j)|`` vanishes somewhere on the support.
    """
    f = np.polynomial.Polynomial([float(c) for c in coefficients])
    r = cutoff.radius
    grid = np.linspace(-r, r, samples)
    total = sum(np.abs(f.deriv(j)(grid)) for j in range(2, n + 1))
    lower, upper = float(np.min(total)), float(np.max(total))
    if lower <= 1e-12 * max(1.0, upper):
        point = float(grid[int(np.argmin(total))])
        raise PreconditionError(f"Derivative bound fails at s={point}: sum |f^(j)| = {lower}")

    ratios = []
    lambdas = sorted(lambda_grid)
    for lam in lambdas:
        integral, _, _ = _polynomial_line_integral(
            coefficients, cutoff, lam, r, gauss_order, oversample, min_panels, budget // gauss_order
        )
        ratios.append(abs(integral) * (1 + lam) ** (1.0 / n))

    trend = float(np.polyfit(np.log(lambdas), np.log(ratios), 1)[0]) if len(lambdas) > 1 else 0.0
    report = VdcReport(n, lower, upper, tuple(lambdas), tuple(ratios), max(ratios), trend, trend <= trend_tolerance)
    logger.info(f"Van der Corput check n={n}: sup ratio {report.sup_ratio:.4f}, trend {trend:.4f}")
    return report
