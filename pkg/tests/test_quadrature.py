"""Quadrature, cumulative integration and extrapolation tests."""

import math

import numpy as np
import pytest

from topospectra.quadrature import (
    adaptive_gauss,
    cumulative_integral,
    gauss_legendre_rule,
    richardson,
)


def test_gauss_rule_integrates_high_degree_polynomials_exactly():
    nodes, weights = gauss_legendre_rule(15)
    # degree 29 is exact for a 15-point rule
    value = float(np.dot(weights, nodes**28))
    assert value == pytest.approx(2.0 / 29.0, rel=1e-13)


def test_adaptive_polynomial():
    res = adaptive_gauss(lambda x: x**3, 0.0, 1.0)
    assert res.value == pytest.approx(0.25, abs=1e-14)


def test_adaptive_sine():
    res = adaptive_gauss(np.sin, 0.0, math.pi)
    assert res.value == pytest.approx(2.0, rel=1e-12)
    assert res.error < 1e-9


def test_adaptive_reversed_interval_flips_sign():
    forward = adaptive_gauss(np.exp, 0.0, 1.0)
    backward = adaptive_gauss(np.exp, 1.0, 0.0)
    assert backward.value == pytest.approx(-forward.value, rel=1e-14)


def test_adaptive_sharp_peak():
    # integral of 1/(x^2 + a^2) over [-1, 1] = 2 atan(1/a) / a
    a = 1e-2
    res = adaptive_gauss(lambda x: 1.0 / (x**2 + a**2), -1.0, 1.0, rtol=1e-10)
    expected = 2.0 * math.atan(1.0 / a) / a
    assert res.value == pytest.approx(expected, rel=1e-9)


def test_empty_interval():
    res = adaptive_gauss(np.sin, 2.0, 2.0)
    assert res.value == 0.0 and res.neval == 0


def test_cumulative_integral_uniform():
    x = np.linspace(0.0, math.pi, 2001)
    c = cumulative_integral(x, np.cos(x))
    assert np.abs(c - np.sin(x)).max() < 1e-11


def test_cumulative_integral_nonuniform():
    rng = np.random.default_rng(3)
    x = np.sort(rng.uniform(0.0, 2.0, 1500))
    x[0], x[-1] = 0.0, 2.0
    c = cumulative_integral(x, np.exp(x))
    assert np.abs(c - (np.exp(x) - 1.0)).max() < 1e-7


def test_cumulative_integral_short_inputs():
    assert cumulative_integral([0.0], [1.0]).tolist() == [0.0]
    two = cumulative_integral([0.0, 2.0], [1.0, 3.0])
    assert two[-1] == pytest.approx(4.0)


def test_richardson_first_order_sequence():
    # v(d) = 10 + 3 d + 0.5 d^2 at d = 0.1, 0.05, 0.025
    vals = [10.0 + 3.0 * d + 0.5 * d**2 for d in (0.1, 0.05, 0.025)]
    limit, _ = richardson(vals, ratio=2.0, base_order=1)
    assert limit == pytest.approx(10.0, abs=1e-12)


def test_richardson_second_order_sequence():
    vals = [4.0 + 7.0 * d**2 for d in (0.2, 0.1, 0.05)]
    limit, _ = richardson(vals, ratio=2.0, base_order=2)
    assert limit == pytest.approx(4.0, abs=1e-12)
