"""Potentials, kinetic metrics, mechanical systems and the allowed region.

A conservative system is the tuple (metric g, potential V, energy E) on a
configuration space of dimension k.  Trajectories live in the open region
Sigma = {q : E > V(q)}; its boundary consists of turning points, found here
by bracketing and bisection along rays.

Central potentials support two coordinate conventions, selected by the
``chart`` attribute: "cartesian" reads the radius as |q|, "radial" reads it
as q[0] (used with the polar kinetic metric and with one-dimensional
effective radial problems).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from . import findiff
from .errors import DimensionError, DomainError

__all__ = [
    "CANONICAL_FIELD_NAMES",
    "PotentialField",
    "FreePotential",
    "HarmonicPotential",
    "KeplerPotential",
    "CentralPotential",
    "GridSampledPotential",
    "KineticMetric",
    "CartesianMassMetric",
    "PolarKineticMetric",
    "GeneralKineticMetric",
    "MechanicalSystem",
    "SigmaDomain",
    "RayCrossings",
    "evaluate_potential",
    "potential_gradient",
    "potential_hessian",
    "sigma_contains",
    "turning_points",
    "harmonic_system",
    "kepler_system",
    "free_system",
    "central_system",
    "effective_radial_system",
]


# Canonical key names under which systems are described in run configs.
CANONICAL_FIELD_NAMES = (
    "dimension",
    "metric.form",
    "metric.m",
    "potential.family",
    "potential.k1",
    "potential.k2",
    "potential.alpha",
    "energy",
    "angular_momentum",
)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

class PotentialField:
    """Base class: deterministic scalar field with gradient and Hessian.

    Subclasses implement ``value``; analytic derivatives are overridden
    where the family provides them, otherwise central finite differences
    with step max(1e-6, 1e-6 |q|) are used.
    """

    family = "abstract"
    dimension: int = 0

    def value(self, q: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return findiff.gradient(self.value, q, findiff.gradient_step(q))

    def hessian(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return findiff.hessian(self.value, q, findiff.gradient_step(q) * 10.0)

    def _check_point(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.size != self.dimension:
            raise DimensionError(
                f"{self.family} potential has dimension {self.dimension}, got point of size {q.size}"
            )
        return q


@dataclass(frozen=True)
class FreePotential(PotentialField):
    dimension: int = 2

    family = "free"

    def value(self, q):
        self._check_point(q)
        return 0.0

    def gradient(self, q):
        return np.zeros(self.dimension)

    def hessian(self, q):
        return np.zeros((self.dimension, self.dimension))


@dataclass(frozen=True)
class HarmonicPotential(PotentialField):
    """V = (1/2) sum_i springs[i] * q_i**2 in Cartesian coordinates."""

    springs: tuple[float, ...] = (1.0,)

    family = "harmonic"

    def __post_init__(self):
        object.__setattr__(self, "springs", tuple(float(s) for s in self.springs))

    @property
    def dimension(self) -> int:
        return len(self.springs)

    def value(self, q):
        q = self._check_point(q)
        return 0.5 * float(np.dot(self.springs, q * q))

    def gradient(self, q):
        q = self._check_point(q)
        return np.asarray(self.springs) * q

    def hessian(self, q):
        self._check_point(q)
        return np.diag(self.springs)


class _RadialPotential(PotentialField):
    """Shared radius handling for central potentials."""

    chart = "cartesian"

    def _radius(self, q: np.ndarray) -> float:
        q = self._check_point(q)
        if self.chart == "radial":
            return float(q[0])
        return float(np.linalg.norm(q))

    def _radial_unit(self, q: np.ndarray) -> np.ndarray:
        q = self._check_point(q)
        if self.chart == "radial":
            e = np.zeros(self.dimension)
            e[0] = 1.0
            return e
        r = float(np.linalg.norm(q))
        return q / r

    # Radial profile interface used by the curvature closed forms.
    def radial_value(self, r: float) -> float:
        raise NotImplementedError

    def radial_derivative(self, r: float) -> float:
        raise NotImplementedError

    def radial_second_derivative(self, r: float) -> float:
        raise NotImplementedError

    def value(self, q):
        return self.radial_value(self._radius(q))

    def gradient(self, q):
        r = self._radius(q)
        dV = self.radial_derivative(r)
        if self.chart == "radial":
            out = np.zeros(self.dimension)
            out[0] = dV
            return out
        return dV * self._radial_unit(q)

    def hessian(self, q):
        r = self._radius(q)
        d1 = self.radial_derivative(r)
        d2 = self.radial_second_derivative(r)
        if self.chart == "radial":
            out = np.zeros((self.dimension, self.dimension))
            out[0, 0] = d2
            return out
        n = self._radial_unit(q)
        eye = np.eye(self.dimension)
        return d2 * np.outer(n, n) + (d1 / r) * (eye - np.outer(n, n))


@dataclass(frozen=True)
class KeplerPotential(_RadialPotential):
    """Attractive inverse-distance potential V(r) = -alpha / r, alpha > 0."""

    alpha: float = 1.0
    dimension: int = 2
    chart: str = "cartesian"

    family = "kepler"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("kepler coupling alpha must be positive")
        if self.chart not in ("cartesian", "radial"):
            raise ValueError(f"unknown chart {self.chart!r}")

    def _radius(self, q):
        r = super()._radius(q)
        if r <= 0.0:
            raise DomainError(f"kepler potential undefined at r = {r}")
        return r

    def radial_value(self, r):
        return -self.alpha / r

    def radial_derivative(self, r):
        return self.alpha / r**2

    def radial_second_derivative(self, r):
        return -2.0 * self.alpha / r**3


@dataclass(frozen=True)
class CentralPotential(_RadialPotential):
    """Central potential defined by a radial profile V(r).

    Missing derivative callables fall back to finite differences of the
    profile.
    """

    profile: Callable[[float], float] = lambda r: 0.0
    dprofile: Callable[[float], float] | None = None
    d2profile: Callable[[float], float] | None = None
    dimension: int = 2
    chart: str = "cartesian"
    name: str = "central_custom"

    family = "central_custom"

    def radial_value(self, r):
        return float(self.profile(r))

    def radial_derivative(self, r):
        if self.dprofile is not None:
            return float(self.dprofile(r))
        h = max(1e-6, 1e-6 * abs(r))
        return (self.profile(r + h) - self.profile(r - h)) / (2.0 * h)

    def radial_second_derivative(self, r):
        if self.d2profile is not None:
            return float(self.d2profile(r))
        h = max(1e-5, 1e-5 * abs(r))
        return (self.profile(r + h) - 2.0 * self.profile(r) + self.profile(r - h)) / h**2


class GridSampledPotential(PotentialField):
    """One-dimensional potential tabulated on a grid, spline interpolated.

    Cubic interpolation is the default; curvature computations need two
    derivatives, which order >= 3 provides.
    """

    family = "grid_sampled"
    dimension = 1

    def __init__(self, grid: Sequence[float], values: Sequence[float], order: int = 3):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size != values.size:
            raise ValueError("grid and values must be equal-length 1-D arrays")
        if grid.size < order + 1:
            raise ValueError("not enough samples for the requested order")
        self.grid = grid
        self.values = values
        self.order = int(order)
        self._spline = make_interp_spline(grid, values, k=self.order)
        self._dspline = self._spline.derivative()
        self._d2spline = self._spline.derivative(2) if self.order >= 2 else None

    def _coord(self, q) -> float:
        q = self._check_point(q)
        x = float(q[0])
        if x < self.grid[0] or x > self.grid[-1]:
            raise DomainError(f"query {x} outside tabulated range [{self.grid[0]}, {self.grid[-1]}]")
        return x

    def value(self, q):
        return float(self._spline(self._coord(q)))

    def gradient(self, q):
        return np.array([float(self._dspline(self._coord(q)))])

    def hessian(self, q):
        if self._d2spline is None:
            return super().hessian(q)
        return np.array([[float(self._d2spline(self._coord(q)))]])


# ---------------------------------------------------------------------------
# Kinetic metrics
# ---------------------------------------------------------------------------

class KineticMetric:
    """Symmetric positive-definite metric g(q) defining T = (1/2) g(v, v)."""

    form = "abstract"
    dimension: int = 0

    def matrix(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, q: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.matrix(q))

    def derivative(self, q: np.ndarray) -> np.ndarray:
        """d g_{ab} / d q^c, shape (k, k, k); finite differences by default."""
        q = np.asarray(q, dtype=float)
        return findiff.array_jacobian(self.matrix, q, findiff.geometry_step(q, 1e-6))

    def christoffels(self, q: np.ndarray) -> np.ndarray:
        """Levi-Civita symbols Gamma^a_{bc} of g."""
        dg = self.derivative(q)
        ginv = self.inverse(q)
        # dg[a, b, c] = d g_{ab} / d q^c; operand indexed [d, c, b] below
        combo = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 1, 0)
        return 0.5 * np.einsum("ad,dcb->abc", ginv, combo)


@dataclass(frozen=True)
class CartesianMassMetric(KineticMetric):
    """g = m * identity in Cartesian coordinates."""

    mass: float = 1.0
    dimension: int = 2

    form = "cartesian_mass"

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    def matrix(self, q):
        return self.mass * np.eye(self.dimension)

    def inverse(self, q):
        return np.eye(self.dimension) / self.mass

    def derivative(self, q):
        return np.zeros((self.dimension,) * 3)

    def christoffels(self, q):
        return np.zeros((self.dimension,) * 3)


@dataclass(frozen=True)
class PolarKineticMetric(KineticMetric):
    """Plane in polar coordinates q = (r, theta): g = diag(m, m r^2)."""

    mass: float = 1.0

    form = "diagonal_polar"
    dimension = 2

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    def _radius(self, q) -> float:
        r = float(np.asarray(q, dtype=float).reshape(-1)[0])
        if r <= 0.0:
            raise DomainError(f"polar chart requires r > 0, got {r}")
        return r

    def matrix(self, q):
        r = self._radius(q)
        return np.diag([self.mass, self.mass * r**2])

    def inverse(self, q):
        r = self._radius(q)
        return np.diag([1.0 / self.mass, 1.0 / (self.mass * r**2)])

    def derivative(self, q):
        r = self._radius(q)
        out = np.zeros((2, 2, 2))
        out[1, 1, 0] = 2.0 * self.mass * r
        return out

    def christoffels(self, q):
        r = self._radius(q)
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = -r
        out[1, 0, 1] = out[1, 1, 0] = 1.0 / r
        return out


@dataclass(frozen=True)
class GeneralKineticMetric(KineticMetric):
    """Metric given by an arbitrary smooth matrix-valued function of q."""

    fn: Callable[[np.ndarray], np.ndarray] = None  # type: ignore[assignment]
    dimension: int = 2

    form = "general_smooth"

    def matrix(self, q):
        g = np.asarray(self.fn(np.asarray(q, dtype=float)), dtype=float)
        if g.shape != (self.dimension, self.dimension):
            raise DimensionError(f"metric function returned shape {g.shape}")
        if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12):
            raise ValueError("metric matrix is not symmetric")
        return 0.5 * (g + g.T)


# ---------------------------------------------------------------------------
# Mechanical systems and the allowed region
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MechanicalSystem:
    """Conservative system (g, V, E) with named physical parameters.

    ``probe_point``, when given, is checked to lie inside Sigma so that the
    allowed region is known to be nonempty.
    """

    metric: KineticMetric
    potential: PotentialField
    energy: float
    params: Mapping[str, float] = field(default_factory=dict)
    probe_point: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.metric.dimension != self.potential.dimension:
            raise DimensionError(
                f"metric dimension {self.metric.dimension} != potential dimension {self.potential.dimension}"
            )
        if not math.isfinite(self.energy):
            raise ValueError("energy must be finite")
        merged = {}
        if hasattr(self.metric, "mass"):
            merged["m"] = float(self.metric.mass)
        if isinstance(self.potential, HarmonicPotential):
            for i, s in enumerate(self.potential.springs, start=1):
                merged[f"k{i}"] = s
        if isinstance(self.potential, KeplerPotential):
            merged["alpha"] = self.potential.alpha
        merged.update({k: float(v) for k, v in dict(self.params).items()})
        object.__setattr__(self, "params", merged)
        if self.probe_point is not None:
            probe = np.asarray(self.probe_point, dtype=float)
            if not sigma_contains(self, probe):
                raise DomainError(
                    f"probe point {self.probe_point} is not inside the allowed region"
                )

    @property
    def k(self) -> int:
        return self.metric.dimension

    def potential_value(self, q) -> float:
        return evaluate_potential(self.potential, q)

    def sigma_margin(self, q) -> float:
        """E - V(q); positive inside the allowed region."""
        return self.energy - self.potential_value(q)

    def conformal_weight(self, q) -> float:
        """The factor 2 (E - V(q)) multiplying g in the Jacobi metric."""
        w = 2.0 * self.sigma_margin(q)
        if w <= 0.0:
            raise DomainError(f"point {np.asarray(q)} lies outside the allowed region")
        return w


@dataclass(frozen=True)
class SigmaDomain:
    """Allowed region of a system with a quadrature cutoff epsilon.

    Nodes handed to quadrature must satisfy E - V >= epsilon; membership
    itself uses the strict inequality E - V > 0.
    """

    system: MechanicalSystem
    epsilon: float = 1e-9
    box: tuple[tuple[float, float], ...] | None = None
    radial: tuple[float, float] | None = None

    def contains(self, q) -> bool:
        return sigma_contains(self.system, q)

    def node_margin(self, q) -> float:
        return self.system.sigma_margin(q) - self.epsilon

    def require_node(self, q) -> None:
        if self.node_margin(q) < 0.0:
            raise DomainError(
                f"quadrature node {np.asarray(q)} violates E - V >= {self.epsilon}"
            )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def evaluate_potential(potential: PotentialField, q) -> float:
    return float(potential.value(np.asarray(q, dtype=float)))


def potential_gradient(potential: PotentialField, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if isinstance(potential, KeplerPotential):
        r = potential._radius(q)
        if r <= findiff.gradient_step(q):
            raise DomainError(f"gradient evaluated too close to the kepler singularity (r = {r})")
    return np.asarray(potential.gradient(q), dtype=float)


def potential_hessian(potential: PotentialField, q) -> np.ndarray:
    return np.asarray(potential.hessian(np.asarray(q, dtype=float)), dtype=float)


def sigma_contains(system: MechanicalSystem, q) -> bool:
    try:
        return system.sigma_margin(q) > 0.0
    except DomainError:
        return False


@dataclass(frozen=True)
class RayCrossings:
    """Boundary crossings along a ray, as parameter values."""

    parameters: tuple[float, ...]
    search_bound: float

    @property
    def unbounded(self) -> bool:
        return not self.parameters


def turning_points(
    system: MechanicalSystem,
    origin,
    direction,
    search_bound: float = 100.0,
    samples: int = 4096,
    tol: float = 1e-10,
) -> RayCrossings:
    """Find parameters t > 0 where E - V(origin + t * direction) crosses zero.

    The ray is scanned at ``samples`` points; each sign change is refined by
    bisection to absolute tolerance ``tol`` in the parameter.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)

    def margin(t: float) -> float:
        return system.sigma_margin(origin + t * direction)

    if margin(0.0) <= 0.0:
        raise DomainError("ray origin is not inside the allowed region")

    ts = np.linspace(0.0, search_bound, samples + 1)
    crossings = []
    prev_t, prev_w = 0.0, margin(0.0)
    for t in ts[1:]:
        w = margin(float(t))
        if prev_w > 0.0 >= w:
            lo, hi = prev_t, float(t)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if margin(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            crossings.append(0.5 * (lo + hi))
            prev_t, prev_w = float(t), w
            continue
        if prev_w <= 0.0 < w:
            # re-entry into Sigma; keep scanning for the next exit
            pass
        prev_t, prev_w = float(t), w
    return RayCrossings(tuple(crossings), search_bound)


# ---------------------------------------------------------------------------
# System factories
# ---------------------------------------------------------------------------

def harmonic_system(
    springs: Sequence[float],
    mass: float = 1.0,
    energy: float = 1.0,
    extra_params: Mapping[str, float] | None = None,
) -> MechanicalSystem:
    springs = tuple(float(s) for s in springs)
    return MechanicalSystem(
        metric=CartesianMassMetric(mass=mass, dimension=len(springs)),
        potential=HarmonicPotential(springs),
        energy=energy,
        params=dict(extra_params or {}),
        probe_point=(0.0,) * len(springs),
    )


def free_system(dimension: int = 2, mass: float = 1.0, energy: float = 0.5) -> MechanicalSystem:
    return MechanicalSystem(
        metric=CartesianMassMetric(mass=mass, dimension=dimension),
        potential=FreePotential(dimension),
        energy=energy,
        probe_point=(0.0,) * dimension,
    )


def kepler_system(
    alpha: float = 1.0,
    mass: float = 1.0,
    energy: float = -0.5,
    angular_momentum: float | None = None,
    coords: str = "polar",
) -> MechanicalSystem:
    """Particle in V = -alpha/r; polar (r, theta) or Cartesian coordinates."""
    extra = {}
    if angular_momentum is not None:
        extra["l"] = float(angular_momentum)
    if energy >= 0:
        probe_r = 1.0
    else:
        probe_r = 0.5 * alpha / abs(energy)
    if coords == "polar":
        metric: KineticMetric = PolarKineticMetric(mass=mass)
        potential: PotentialField = KeplerPotential(alpha, dimension=2, chart="radial")
        probe = (probe_r, 0.0)
    elif coords == "cartesian":
        metric = CartesianMassMetric(mass=mass, dimension=2)
        potential = KeplerPotential(alpha, dimension=2, chart="cartesian")
        probe = (probe_r, 0.0)
    else:
        raise ValueError(f"unknown coordinate choice {coords!r}")
    return MechanicalSystem(metric, potential, energy, params=extra, probe_point=probe)


def central_system(
    profile: Callable[[float], float],
    dprofile: Callable[[float], float] | None = None,
    d2profile: Callable[[float], float] | None = None,
    mass: float = 1.0,
    energy: float = 1.0,
    coords: str = "polar",
    probe_point: tuple[float, ...] | None = None,
    angular_momentum: float | None = None,
) -> MechanicalSystem:
    extra = {} if angular_momentum is None else {"l": float(angular_momentum)}
    if coords == "polar":
        metric: KineticMetric = PolarKineticMetric(mass=mass)
        potential = CentralPotential(profile, dprofile, d2profile, dimension=2, chart="radial")
    elif coords == "cartesian":
        metric = CartesianMassMetric(mass=mass, dimension=2)
        potential = CentralPotential(profile, dprofile, d2profile, dimension=2, chart="cartesian")
    else:
        raise ValueError(f"unknown coordinate choice {coords!r}")
    return MechanicalSystem(metric, potential, energy, params=extra, probe_point=probe_point)


def effective_radial_system(
    alpha: float,
    angular_momentum: float,
    mass: float = 1.0,
    energy: float = -0.5,
    probe_r: float | None = None,
) -> MechanicalSystem:
    """One-dimensional effective radial problem for the kepler potential.

    V_eff(r) = -alpha/r + l^2 / (2 m r^2), on the half-line r > 0.
    """
    l2 = angular_momentum**2

    def profile(r: float) -> float:
        return -alpha / r + l2 / (2.0 * mass * r**2)

    def dprofile(r: float) -> float:
        return alpha / r**2 - l2 / (mass * r**3)

    def d2profile(r: float) -> float:
        return -2.0 * alpha / r**3 + 3.0 * l2 / (mass * r**4)

    potential = CentralPotential(profile, dprofile, d2profile, dimension=1, chart="radial")
    metric = CartesianMassMetric(mass=mass, dimension=1)
    if probe_r is None:
        probe_r = l2 / (mass * alpha) if angular_momentum != 0 else 0.5 * alpha / abs(energy)
    return MechanicalSystem(
        metric,
        potential,
        energy,
        params={"alpha": alpha, "l": angular_momentum},
        probe_point=(probe_r,),
    )
