"""Discretization relations f(parameters) = n and their solvers.

Setting a class integral equal to an integer n turns the smooth parameter
dependence of a mechanical system into a discrete family: the topological
spectrum.  Implemented relations:

* harmonic oscillator (reduced): k q0 / (k q0^2 - 2 E) = n, with the
  canonical map q0(n) that carries it into E = hbar omega (n + 1/2);
* central inverse-distance field: with x = 2 |E| l^2 / (m alpha^2), the
  boundary-term evaluation at the apsidal radii gives -2 sqrt(1-x) / x,
  while the reciprocal form states -x / sqrt(1-x) = 1/n.  The
  two differ by a factor of two under substitution, so both are returned
  side by side; the boundary-term value is the one backed by quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolveError

__all__ = [
    "SpectrumRelation",
    "HOSpectrumParams",
    "KeplerSpectrumParams",
    "KeplerSpectrumValues",
    "SpectrumRow",
    "ho_topological_spectrum",
    "ho_canonical_map",
    "kepler_apsidal",
    "kepler_spectrum",
    "solve_level",
    "harmonic_relation",
    "kepler_boundary_relation",
    "kepler_reciprocal_relation",
    "spectrum_table",
    "spectrum_table_csv",
]

FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumRelation:
    """A scalar map f over named parameters whose integer level sets
    discretize the system.

    ``admissible`` gives open intervals for parameters that may be solved
    for; evaluation outside them raises DomainError.
    """

    name: str
    fn: Callable[[Mapping[str, float]], float]
    fixed: Mapping[str, float]
    admissible: Mapping[str, tuple[float, float]]

    def evaluate(self, **overrides: float) -> float:
        values = {**dict(self.fixed), **overrides}
        for key, (lo, hi) in self.admissible.items():
            if key in values and not (lo < values[key] < hi):
                raise DomainError(
                    f"{key} = {values[key]} outside admissible range ({lo}, {hi})"
                )
        return float(self.fn(values))


def ho_topological_spectrum(k_spring: float, E: float, q0: float) -> float:
    """k q0 / (k q0^2 - 2 E); the limit q0 -> +-inf gives 0."""
    if math.isinf(q0):
        return 0.0
    denom = k_spring * q0**2 - 2.0 * E
    if denom == 0.0:
        raise DomainError("q0 sits exactly at the turning point")
    return k_spring * q0 / denom


@dataclass(frozen=True)
class HOSpectrumParams:
    """Oscillator parameters realizing level n of the reduced relation."""

    m: float
    k_spring: float
    E: float
    q0: float
    hbar: float
    omega: float
    C: float


def ho_canonical_map(n: int, m: float = 1.0, k_spring: float = 1.0, hbar: float = 1.0) -> HOSpectrumParams:
    """Choice of (E, q0) carrying level n into E = hbar omega (n + 1/2).

    With C = 2 (E / (hbar omega) - 1/2) = 2n and
    q0 = 1/C - sqrt(1/C^2 + 2E/k), the identity k q0^2 - 2E = 2 k q0 / C
    makes the level recovery exact.  n = 0 is reported as the limiting
    q0 -> -inf tuple; the relation value still converges to 0 there.
    """
    if n < 0:
        raise ValueError("levels of the canonical oscillator spectrum are nonnegative")
    omega = math.sqrt(k_spring / m)
    E = hbar * omega * (n + 0.5)
    C = 2.0 * (E / (hbar * omega) - 0.5)
    if n == 0:
        return HOSpectrumParams(m, k_spring, E, -math.inf, hbar, omega, C)
    q0 = 1.0 / C - math.sqrt(1.0 / C**2 + 2.0 * E / k_spring)
    return HOSpectrumParams(m, k_spring, E, q0, hbar, omega, C)


# ---------------------------------------------------------------------------
# Central inverse-distance field
# ---------------------------------------------------------------------------

def _kepler_x(m: float, alpha: float, l: float, E: float) -> float:
    if E >= 0:
        raise DomainError("bound orbits require E < 0")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = 2.0 * abs(E) * l**2 / (m * alpha**2)
    if x > 1.0:
        raise DomainError(f"no real turning radii: x = {x} > 1")
    if x <= 0.0:
        raise DomainError("apsidal radii need nonzero angular momentum")
    return x


@dataclass(frozen=True)
class KeplerSpectrumParams:
    """Bound-orbit parameters with derived eccentricity combination x."""

    m: float
    alpha: float
    l: float
    E: float

    def __post_init__(self):
        _kepler_x(self.m, self.alpha, self.l, self.E)

    @property
    def x(self) -> float:
        return _kepler_x(self.m, self.alpha, self.l, self.E)

    @property
    def apsidal(self) -> tuple[float, float]:
        return kepler_apsidal(self.m, self.alpha, self.l, self.E)


def kepler_apsidal(m: float, alpha: float, l: float, E: float) -> tuple[float, float]:
    """Apsidal radii r_-+ = alpha / (2|E|) (1 -+ sqrt(1 - x)).

    Both satisfy E = l^2 / (2 m r^2) - alpha / r, the vanishing of the
    radial velocity at fixed energy and angular momentum.
    """
    x = _kepler_x(m, alpha, l, E)
    root = math.sqrt(1.0 - x)
    scale = alpha / (2.0 * abs(E))
    return scale * (1.0 - root), scale * (1.0 + root)


@dataclass(frozen=True)
class KeplerSpectrumValues:
    """Both published forms of the bound-orbit spectrum, side by side."""

    reciprocal_level_value: float          # -x / sqrt(1 - x), level statement f = 1/n
    boundary_term_value: float  # -2 sqrt(1 - x) / x, from the endpoint terms
    x: float


def kepler_spectrum(m: float, alpha: float, l: float, E: float) -> KeplerSpectrumValues:
    x = _kepler_x(m, alpha, l, E)
    if x == 1.0:
        raise DomainError("circular orbit: the reciprocal form degenerates at x = 1")
    root = math.sqrt(1.0 - x)
    return KeplerSpectrumValues(
        reciprocal_level_value=-x / root,
        boundary_term_value=-2.0 * root / x,
        x=x,
    )


# ---------------------------------------------------------------------------
# Relation factories and level solving
# ---------------------------------------------------------------------------

def harmonic_relation(k_spring: float | None = None, E: float | None = None,
                      q0: float | None = None) -> SpectrumRelation:
    fixed = {}
    if k_spring is not None:
        fixed["k_spring"] = float(k_spring)
    if E is not None:
        fixed["E"] = float(E)
    if q0 is not None:
        fixed["q0"] = float(q0)

    def fn(values: Mapping[str, float]) -> float:
        return ho_topological_spectrum(values["k_spring"], values["E"], values["q0"])

    admissible = {}
    if E is not None and k_spring is not None:
        turning = math.sqrt(2.0 * E / k_spring)
        admissible["q0"] = (-turning, turning)
    return SpectrumRelation("harmonic_reduced", fn, fixed, admissible)


def _kepler_relation(name: str, m: float, alpha: float, l: float, which: str) -> SpectrumRelation:
    fixed = {"m": float(m), "alpha": float(alpha), "l": float(l)}
    x_max = m * alpha**2 / (2.0 * l**2)

    def fn(values: Mapping[str, float]) -> float:
        vals = kepler_spectrum(values["m"], values["alpha"], values["l"], -values["abs_energy"])
        return getattr(vals, which)

    return SpectrumRelation(name, fn, fixed, {"abs_energy": (0.0, x_max)})


def kepler_boundary_relation(m: float = 1.0, alpha: float = 1.0, l: float = 0.6) -> SpectrumRelation:
    return _kepler_relation("kepler_boundary_term", m, alpha, l, "boundary_term_value")


def kepler_reciprocal_relation(m: float = 1.0, alpha: float = 1.0, l: float = 0.6) -> SpectrumRelation:
    return _kepler_relation("kepler_reciprocal", m, alpha, l, "reciprocal_level_value")


def solve_level(
    relation: SpectrumRelation,
    level: float,
    free_param: str,
    bracket: tuple[float, float],
    rtol: float = 1e-12,
    monotone_samples: int = 33,
) -> float:
    """Solve f(lambda) = level for the free parameter inside the bracket.

    Monotonicity over the bracket is checked by sampling (a warning is
    issued if it fails); the root itself comes from bracketed bisection and
    secant refinement.
    """
    lo, hi = float(bracket[0]), float(bracket[1])

    def g(value: float) -> float:
        return relation.evaluate(**{free_param: value}) - level

    samples = np.linspace(lo, hi, monotone_samples)
    values = np.array([g(float(s)) for s in samples])
    diffs = np.diff(values)
    if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
        warnings.warn(
            f"relation {relation.name} is not monotone in {free_param} over the bracket",
            stacklevel=2,
        )
    if values[0] == 0.0:
        return lo
    if values[-1] == 0.0:
        return hi
    if values[0] * values[-1] > 0:
        raise SolveError(
            f"no sign change of {relation.name} - {level} for {free_param} in [{lo}, {hi}]"
        )
    root = brentq(g, lo, hi, xtol=1e-14, rtol=max(rtol, 4e-16))
    return float(root)


@dataclass(frozen=True)
class SpectrumRow:
    n: float
    param_name: str
    param_value: float
    f_value: float
    residual: float


def spectrum_table(
    relation: SpectrumRelation,
    levels,
    free_param: str,
    bracket: tuple[float, float],
) -> list[SpectrumRow]:
    rows = []
    for n in levels:
        value = solve_level(relation, float(n), free_param, bracket)
        f_val = relation.evaluate(**{free_param: value})
        rows.append(SpectrumRow(float(n), free_param, value, f_val, f_val - float(n)))
    return rows


def spectrum_table_csv(rows) -> str:
    lines = ["n,param_name,param_value,f_value,residual"]
    for row in rows:
        lines.append(
            ",".join(
                [FLOAT_FORMAT % row.n, row.param_name]
                + [FLOAT_FORMAT % v for v in (row.param_value, row.f_value, row.residual)]
            )
        )
    return "\n".join(lines) + "\n"
