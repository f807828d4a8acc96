"""
Floating-point kernels shared by the oscillatory and sublevel verifiers.

Polynomials are evaluated with a compensated Horner scheme (error-free products via
Dekker splitting, error-free sums via Knuth's TwoSum) so that the phase keeps close to
full relative accuracy when multiplied by a large frequency.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from newtonheight.errors import QuadratureBudgetError

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    high = c - (c - a)
    return high, a - high


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def compensated_horner(high, low, x):
    """
    Evaluate ``sum(c_k x**k)`` given coefficients highest power first.

    ``high`` and ``low`` hold the leading and trailing float parts of each coefficient
    (scalars or arrays broadcastable against ``x``). Returns ``(value, correction)``;
    their sum is the compensated result.
    """
    s = np.zeros(np.broadcast(x, high[0]).shape) + high[0]
    correction = np.zeros_like(s) + low[0]
    for h, l in zip(high[1:], low[1:]):
        p, p_err = two_prod(s, x)
        s, s_err = two_sum(p, h)
        correction = correction * x + (p_err + s_err + l)
    return s, correction


def _float_parts(value):
    value = Fraction(value)
    high = float(value)
    return high, float(value - Fraction(high))


class CompiledPhase:
    """Vectorized evaluator of a BivariatePolynomial plus gradient bounds over boxes."""

    def __init__(self, phi):
        self.phi = phi
        self.degree1 = phi.degree_in(1)
        self.degree2 = phi.degree_in(2)
        self._columns = []
        for a2 in range(self.degree2, -1, -1):
            parts = [_float_parts(phi.coefficient(a1, a2)) for a1 in range(self.degree1, -1, -1)]
            self._columns.append(([h for h, _ in parts], [l for _, l in parts]))
        self._gradient_terms = [
            [(abs(float(c)), a1, a2) for (a1, a2), c in phi.partial_derivative(1, 0).terms.items()],
            [(abs(float(c)), a1, a2) for (a1, a2), c in phi.partial_derivative(0, 1).terms.items()],
        ]

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=np.float64)
        x2 = np.asarray(x2, dtype=np.float64)
        high, low = [], []
        for column_high, column_low in self._columns:
            value, correction = compensated_horner(column_high, column_low, x1)
            high.append(value)
            low.append(correction)
        value, correction = compensated_horner(high, low, x2)
        return value + correction

    def gradient_bound(self, axis, box1, box2):
        """Upper bound of ``|d phi / d x_axis|`` over the box ``box1 x box2`` (intervals)."""
        m1 = max(abs(box1[0]), abs(box1[1]))
        m2 = max(abs(box2[0]), abs(box2[1]))
        return sum(c * m1**a1 * m2**a2 for c, a1, a2 in self._gradient_terms[axis])


def gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


def greedy_panels(low, high, slope_bound, frequency, oversample, min_panels, limit=None):
    """
    Panel edges on ``[low, high]`` so that each panel spans at most ``1/oversample`` of the
    local oscillation period ``2*pi / (frequency * slope)``.

    ``slope_bound(a, b)`` must bound the phase slope on ``[a, b]`` from above.

    :raises QuadratureBudgetError: If more than ``limit`` panels are needed.
    """
    widest = (high - low) / min_panels
    edges = [low]
    x = low
    while high - x > 1e-15 * (high - low):
        width = min(widest, high - x)
        slope = slope_bound(x, x + width)
        if slope > 0:
            width = min(width, 2 * math.pi / (oversample * frequency * slope))
        x = x + width
        edges.append(x)
        if limit is not None and len(edges) > limit + 1:
            raise QuadratureBudgetError(
                f"More than {limit} panels needed on [{low}, {high}] at frequency {frequency}", len(edges), limit
            )
    edges[-1] = high
    return np.asarray(edges)


def panel_nodes(edges, order):
    """Gauss-Legendre nodes and weights on every panel, flattened."""
    t, w = gauss_legendre(order)
    middle = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (middle[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def coarsen(edges):
    """Merge neighbouring panels pairwise."""
    coarse = edges[::2]
    if coarse[-1] != edges[-1]:
        coarse = np.append(coarse, edges[-1])
    return coarse


def pairwise_sum(values):
    """Fixed-shape pairwise tree reduction; the result does not depend on scheduling."""
    values = list(values)
    if not values:
        return 0.0
    while len(values) > 1:
        paired = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            paired.append(values[-1])
        values = paired
    return values[0]


def map_blocks(function, blocks, threads):
    """Apply ``function`` to every block, in parallel when ``threads > 1``, keeping order."""
    if threads <= 1 or len(blocks) <= 1:
        return [function(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, blocks))
