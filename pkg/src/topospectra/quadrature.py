"""Gauss-Legendre quadrature, cumulative sample integration, extrapolation.

The adaptive integrator subdivides panels until the two-half refinement of
each panel agrees with the whole-panel estimate within a width-proportional
share of the tolerance.  Accepted contributions are accumulated with
``math.fsum`` so the result does not depend on reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SolveError

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    neval: int


def _panel(f, a: float, b: float, nodes: np.ndarray, weights: np.ndarray) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(weights, np.asarray(f(mid + half * nodes), dtype=float)))


def adaptive_gauss(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rtol: float = 1e-9,
    atol: float = 1e-9,
    order: int = 15,
    max_panels: int = 4096,
) -> QuadratureResult:
    """Integrate a vectorized integrand over [a, b].

    A reversed interval (a > b) flips the sign of the result.
    """
    sign = 1.0
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    if a > b:
        a, b = b, a
        sign = -1.0
    nodes, weights = gauss_legendre_rule(order)
    width = b - a
    coarse = _panel(f, a, b, nodes, weights)
    neval = order
    scale = max(abs(coarse), atol)
    stack = [(a, b, coarse)]
    accepted: list[float] = []
    errors: list[float] = []
    panels = 1
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, nodes, weights)
        right = _panel(f, mid, hi, nodes, weights)
        neval += 2 * order
        err = abs(left + right - whole)
        local_tol = max(atol, rtol * scale) * (hi - lo) / width
        if err <= local_tol or panels >= max_panels or (hi - lo) <= 1e-14 * (1.0 + abs(lo)):
            accepted.append(left)
            accepted.append(right)
            errors.append(err)
        else:
            stack.append((lo, mid, left))
            stack.append((mid, hi, right))
            panels += 1
    return QuadratureResult(sign * math.fsum(accepted), math.fsum(errors), neval)


def _lagrange_integral(xs, ys, a: float, b: float) -> float:
    """Exact integral over [a, b] of the parabola through three points.

    Works in coordinates centered on the interval so that every term stays
    of order (b - a); evaluating the primitive at absolute coordinates loses
    most of the significand to cancellation.
    """
    mid = 0.5 * (a + b)
    lo, hi = a - mid, b - mid
    total = 0.0
    for i in range(3):
        others = [xs[j] - mid for j in range(3) if j != i]
        u, v = others
        denom = (xs[i] - mid - u) * (xs[i] - mid - v)
        primitive = lambda x: x**3 / 3.0 - 0.5 * (u + v) * x**2 + u * v * x  # noqa: E731
        total += ys[i] * (primitive(hi) - primitive(lo)) / denom
    return total


def cumulative_integral(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cumulative integral of samples (x, y) on a possibly nonuniform grid.

    Each interval is integrated with the parabola through its neighbouring
    triple; interior intervals average the two overlapping parabolas, which
    recovers composite-Simpson accuracy.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n != y.size:
        raise ValueError("sample arrays differ in length")
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * (y[0] + y[1]) * (x[1] - x[0])
        return out
    for i in range(n - 1):
        a, b = x[i], x[i + 1]
        pieces = []
        if i >= 1:
            pieces.append(_lagrange_integral(x[i - 1 : i + 2], y[i - 1 : i + 2], a, b))
        if i + 2 < n:
            pieces.append(_lagrange_integral(x[i : i + 3], y[i : i + 3], a, b))
        out[i + 1] = out[i] + sum(pieces) / len(pieces)
    return out


def richardson(values: Sequence[float], ratio: float = 2.0, base_order: int = 1) -> tuple[float, list[list[float]]]:
    """Extrapolate a sequence v(d), v(d/ratio), ... to d -> 0.

    Assumes an error expansion starting at ``d**base_order`` with unit
    increments.  Returns the final extrapolant and the Neville tableau.
    """
    vals = [float(v) for v in values]
    if len(vals) < 2:
        raise SolveError("extrapolation needs at least two values")
    table = [vals]
    for m in range(1, len(vals)):
        p = base_order + m - 1
        factor = ratio**p
        prev = table[-1]
        table.append([
            (factor * prev[i + 1] - prev[i]) / (factor - 1.0) for i in range(len(prev) - 1)
        ])
    return table[-1][0], table
