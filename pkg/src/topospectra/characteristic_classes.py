"""Curvature-class densities and their integrals over the allowed region.

The density of the top curvature class in even dimension k = 2m is the
epsilon-symbol contraction

    e = (-1)^m / (2^{2m} pi^m m!) * eps_{i1...i2m} R_{i1 i2} ^ ... ^ R_{i2m-1 i2m},

reported here as the coefficient of dq^1 ^ ... ^ dq^k.  In two dimensions it
reduces to -(coefficient of R_12) / (2 pi), and for conformally flat Jacobi
metrics to Laplacian(phi) / (4 pi).  The determinant expansion
Det(I t - R / 2 pi) supplies the lower invariant polynomials p_j.

For a central field V(r) in polar coordinates the single curvature component
has the closed form

    R_r_theta = 1 / (4 m (E - V) r) * d/dr [ r V' / (E - V) ] theta^r ^ theta^theta,

so the annulus integral of the density collapses to a boundary term
-(1/2) r V' / (E - V) evaluated at the radial endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import permutations

import numpy as np

from . import forms
from .errors import DimensionError, DomainError, SolveError
from .jacobi_geometry import curvature_two_form, jacobi_metric
from .quadrature import QuadratureResult, adaptive_gauss, richardson
from .scalar_fields import (
    CartesianMassMetric,
    FreePotential,
    MechanicalSystem,
    PolarKineticMetric,
)

__all__ = [
    "EulerDensity",
    "PontrjaginSet",
    "RegularizedDomain",
    "IntegrationReport",
    "euler_density",
    "euler_density_from_curvature",
    "pontrjagin_forms",
    "pontrjagin_from_curvature",
    "integrate_euler",
    "euler_integral_ho_reduced",
    "ho_reduced_quadrature",
    "central_field_curvature_coefficient",
    "central_field_euler_density_radial",
    "central_field_boundary_term",
]

FLOAT_FORMAT = "%.17g"


def _permutation_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# Densities from curvature
# ---------------------------------------------------------------------------

def euler_density_from_curvature(coordinate_curvature: np.ndarray, k: int) -> float:
    """Top-class density from coordinate curvature components M[a,b,alpha,beta].

    ``M`` uses the convention R_ab = (1/2) M[a,b,alpha,beta] dq^alpha ^ dq^beta.
    """
    if k % 2 != 0:
        raise DimensionError("the top curvature class vanishes in odd dimension")
    m = k // 2
    pref = (-1.0) ** m / (2.0 ** (2 * m) * math.pi**m * math.factorial(m))
    total = forms.zero()
    for perm in permutations(range(k)):
        sign = _permutation_sign(perm)
        product = forms.scalar(1.0)
        for pair in range(m):
            a, b = perm[2 * pair], perm[2 * pair + 1]
            product = forms.wedge(product, forms.two_form(coordinate_curvature[a, b]))
            if not product:
                break
        total = forms.add(total, product, float(sign))
    return pref * forms.top_coefficient(total, k)


@dataclass(frozen=True, eq=False)
class EulerDensity:
    """Coordinate-coefficient density rho(q) of the top curvature class."""

    system: MechanicalSystem

    def __post_init__(self):
        if self.system.k % 2 != 0:
            raise DimensionError("density defined only in even dimension")

    def __call__(self, q) -> float:
        point = jacobi_metric(self.system, q)
        curvature = curvature_two_form(point)
        M = curvature.coordinate_components()
        k = self.system.k
        if k == 2:
            return -M[0, 1, 0, 1] / (2.0 * math.pi)
        return euler_density_from_curvature(M, k)


def euler_density(system: MechanicalSystem, q) -> float:
    return EulerDensity(system)(q)


@dataclass(frozen=True, eq=False)
class PontrjaginSet:
    """Invariant polynomials p_j, each a coordinate-coefficient form.

    ``classes[j]`` is the 4j-form coefficient of t^(k-2j) in
    Det(I t - R / 2 pi); p_0 = 1 and any p_j of degree above k is zero.
    """

    dimension: int
    classes: tuple[dict, ...]

    def coefficient(self, j: int, indices) -> float:
        return forms.coefficient(self.classes[j], tuple(indices))

    def is_zero(self, j: int) -> bool:
        return not self.classes[j]


def pontrjagin_from_curvature(coordinate_curvature: np.ndarray, k: int) -> PontrjaginSet:
    if k > 4:
        raise DimensionError("invariant polynomials implemented for dimension <= 4")
    scale = 1.0 / (2.0 * math.pi)
    entries = [
        [forms.scale(forms.two_form(coordinate_curvature[i, j]), -scale) for j in range(k)]
        for i in range(k)
    ]
    # Determinant of the polynomial matrix M_ij(t) = delta_ij t - S_ij.
    # Each product term is a polynomial in t with form-valued coefficients.
    poly_total: dict[int, dict] = {}
    for perm in permutations(range(k)):
        sign = float(_permutation_sign(perm))
        term: dict[int, dict] = {0: forms.scalar(sign)}
        for i in range(k):
            j = perm[i]
            new_term: dict[int, dict] = {}
            for power, coeff in term.items():
                if i == j:
                    merged = new_term.setdefault(power + 1, {})
                    new_term[power + 1] = forms.add(merged, coeff)
                off = forms.wedge(coeff, entries[i][j])
                if off:
                    new_term[power] = forms.add(new_term.setdefault(power, {}), off)
            term = {p: c for p, c in new_term.items() if c}
        for power, coeff in term.items():
            poly_total[power] = forms.add(poly_total.setdefault(power, {}), coeff)
    classes = []
    for j in range(k // 2 + 1):
        classes.append(poly_total.get(k - 2 * j, {}))
    return PontrjaginSet(k, tuple(classes))


def pontrjagin_forms(system: MechanicalSystem, q) -> PontrjaginSet:
    point = jacobi_metric(system, q)
    curvature = curvature_two_form(point)
    return pontrjagin_from_curvature(curvature.coordinate_components(), system.k)


# ---------------------------------------------------------------------------
# Central-field closed forms
# ---------------------------------------------------------------------------

def _radial_data(system: MechanicalSystem, r: float):
    pot = system.potential
    if isinstance(pot, FreePotential):
        return 0.0, 0.0, 0.0
    if hasattr(pot, "radial_value"):
        return (
            pot.radial_value(r),
            pot.radial_derivative(r),
            pot.radial_second_derivative(r),
        )
    raise DomainError("central-field closed forms need a radial potential")


def central_field_curvature_coefficient(system: MechanicalSystem, r: float) -> float:
    """Coefficient of theta^r ^ theta^theta in the curvature two-form.

    Equals 1 / (4 m (E - V) r) * d/dr [ r V' / (E - V) ].
    """
    if not isinstance(system.metric, PolarKineticMetric):
        raise DomainError("closed form requires polar coordinates")
    V, dV, d2V = _radial_data(system, r)
    margin = system.energy - V
    if margin <= 0:
        raise DomainError(f"radius {r} outside the allowed region")
    m = system.metric.mass
    inner = (dV + r * d2V) / margin + r * dV**2 / margin**2
    return inner / (4.0 * m * margin * r)


def central_field_euler_density_radial(system: MechanicalSystem, r: float) -> float:
    """Density coefficient rho(r) with respect to dr ^ dtheta for polar systems."""
    V, dV, d2V = _radial_data(system, r)
    margin = system.energy - V
    if margin <= 0:
        raise DomainError(f"radius {r} outside the allowed region")
    inner = (dV + r * d2V) / margin + r * dV**2 / margin**2
    return -inner / (4.0 * math.pi)


def central_field_boundary_term(system: MechanicalSystem, r: float) -> float:
    """-(1/2) r V'(r) / (E - V(r)); annulus integrals equal term(r+) - term(r-)."""
    V, dV, _ = _radial_data(system, r)
    margin = system.energy - V
    if margin == 0.0 or abs(margin) < 1e-300:
        raise DomainError("boundary term diverges where E = V")
    return -0.5 * r * dV / margin


# ---------------------------------------------------------------------------
# Integration over regularized domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularizedDomain:
    """Quadrature domain kept strictly inside the allowed region.

    ``kind`` is "radial" (interval [r_lo, r_hi] with an exact angular
    factor) or "box" (axis-aligned bounds).  Every quadrature node must
    satisfy E - V >= epsilon.
    """

    kind: str
    bounds: tuple[tuple[float, float], ...]
    epsilon: float = 1e-9
    angular_factor: float = 2.0 * math.pi
    rtol: float = 1e-9
    atol: float = 1e-9

    @staticmethod
    def radial(r_lo: float, r_hi: float, epsilon: float = 1e-9,
               angular_factor: float = 2.0 * math.pi, rtol: float = 1e-9,
               atol: float = 1e-9) -> "RegularizedDomain":
        return RegularizedDomain("radial", ((float(r_lo), float(r_hi)),), epsilon,
                                 angular_factor, rtol, atol)

    @staticmethod
    def box(bounds, epsilon: float = 1e-9, rtol: float = 1e-9,
            atol: float = 1e-9) -> "RegularizedDomain":
        return RegularizedDomain("box", tuple((float(a), float(b)) for a, b in bounds),
                                 epsilon, 2.0 * math.pi, rtol, atol)

    def shrink(self, margin: float) -> "RegularizedDomain":
        new_bounds = tuple((a + margin, b - margin) for a, b in self.bounds)
        for a, b in new_bounds:
            if a >= b:
                raise ValueError("margin exceeds the domain width")
        return replace(self, bounds=new_bounds)


@dataclass(frozen=True)
class IntegrationReport:
    """Result of integrating a class density, optionally with extrapolation.

    ``rows`` holds (margin, value, error_estimate) per evaluation; margin 0
    denotes a plain single-domain quadrature.
    """

    value: float
    error_estimate: float
    neval: int
    rows: tuple[tuple[float, float, float], ...]
    extrapolated: float | None = None
    converged: bool | None = None

    def to_csv_text(self) -> str:
        lines = ["epsilon,value,error_estimate"]
        for margin, value, err in self.rows:
            lines.append(",".join(FLOAT_FORMAT % v for v in (margin, value, err)))
        if self.extrapolated is not None:
            lines.append(
                ",".join(FLOAT_FORMAT % v for v in (0.0, self.extrapolated, self.error_estimate))
            )
        return "\n".join(lines) + "\n"


def _is_radial_cartesian(system: MechanicalSystem) -> bool:
    return isinstance(system.metric, CartesianMassMetric) and hasattr(
        system.potential, "radial_value"
    ) and getattr(system.potential, "chart", "") == "cartesian"


def _radial_integrand(system: MechanicalSystem, domain: RegularizedDomain):
    """Integrand over r including the coordinate volume weight."""
    if isinstance(system.metric, PolarKineticMetric):
        def f(r_array):
            out = np.empty_like(np.asarray(r_array, dtype=float))
            for i, r in enumerate(np.atleast_1d(r_array)):
                _check_node(system, domain, (float(r), 0.0))
                out[i] = central_field_euler_density_radial(system, float(r))
            return out

        return f
    if _is_radial_cartesian(system):
        if system.k != 2:
            raise DimensionError("radial reduction of box densities implemented for k = 2")
        density = EulerDensity(system)

        def f(r_array):
            out = np.empty_like(np.asarray(r_array, dtype=float))
            for i, r in enumerate(np.atleast_1d(r_array)):
                q = np.array([float(r), 0.0])
                _check_node(system, domain, q)
                out[i] = density(q) * float(r)
            return out

        return f
    raise DomainError("radial domains require a central-field system")


def _check_node(system: MechanicalSystem, domain: RegularizedDomain, q) -> None:
    if system.sigma_margin(np.asarray(q, dtype=float)) < domain.epsilon:
        raise DomainError(
            f"quadrature node {np.asarray(q)} violates E - V >= {domain.epsilon}"
        )


def _evaluate_domain(system: MechanicalSystem, domain: RegularizedDomain) -> QuadratureResult:
    if domain.kind == "radial":
        (r_lo, r_hi), = domain.bounds
        f = _radial_integrand(system, domain)
        res = adaptive_gauss(f, r_lo, r_hi, rtol=domain.rtol, atol=domain.atol)
        return QuadratureResult(domain.angular_factor * res.value,
                                domain.angular_factor * res.error, res.neval)
    if domain.kind == "box":
        if len(domain.bounds) != 2:
            raise DimensionError("box quadrature implemented for two dimensions")
        density = EulerDensity(system)
        (x_lo, x_hi), (y_lo, y_hi) = domain.bounds
        neval = 0

        def inner(x: float) -> float:
            def fy(y_array):
                vals = np.empty_like(np.asarray(y_array, dtype=float))
                for i, y in enumerate(np.atleast_1d(y_array)):
                    q = np.array([x, float(y)])
                    _check_node(system, domain, q)
                    vals[i] = density(q)
                return vals

            res = adaptive_gauss(fy, y_lo, y_hi, rtol=domain.rtol * 0.1, atol=domain.atol * 0.1)
            nonlocal neval
            neval += res.neval
            return res.value

        def fx(x_array):
            return np.array([inner(float(x)) for x in np.atleast_1d(x_array)])

        res = adaptive_gauss(fx, x_lo, x_hi, rtol=domain.rtol, atol=domain.atol)
        return QuadratureResult(res.value, res.error, neval + res.neval)
    raise ValueError(f"unknown domain kind {domain.kind!r}")


def integrate_euler(
    system: MechanicalSystem,
    domain: RegularizedDomain,
    margins=None,
) -> IntegrationReport:
    """Integrate the top-class density over the domain.

    With ``margins`` (a decreasing sequence, typically d, d/2, d/4) the
    domain is shrunk by each margin, the values are extrapolated to margin
    zero by Richardson's scheme, and a convergence verdict is attached;
    integrals that genuinely diverge toward the boundary are flagged, not
    forced.
    """
    if system.k % 2 != 0:
        raise DimensionError("the top curvature class vanishes in odd dimension")
    if margins is None:
        res = _evaluate_domain(system, domain)
        return IntegrationReport(
            value=res.value,
            error_estimate=res.error,
            neval=res.neval,
            rows=((0.0, res.value, res.error),),
        )
    margins = [float(m) for m in margins]
    if len(margins) < 2:
        raise SolveError("extrapolation needs at least two margins")
    ratios = [margins[i] / margins[i + 1] for i in range(len(margins) - 1)]
    if any(r <= 1.0 for r in ratios) or any(
        abs(r - ratios[0]) > 1e-9 * ratios[0] for r in ratios
    ):
        raise SolveError("margins must form a decreasing geometric sequence")
    rows = []
    values = []
    neval = 0
    max_err = 0.0
    for m in margins:
        res = _evaluate_domain(system, domain.shrink(m))
        rows.append((m, res.value, res.error))
        values.append(res.value)
        neval += res.neval
        max_err = max(max_err, res.error)
    ratio = margins[0] / margins[1]
    limit, table = richardson(values, ratio=ratio, base_order=1)
    diag = [table[i][0] for i in range(len(table))]
    step = abs(diag[-1] - diag[-2])
    converged = step <= max(1e-10, 1e-4 * abs(limit), 10.0 * max_err)
    return IntegrationReport(
        value=limit,
        error_estimate=max(step, max_err),
        neval=neval,
        rows=tuple(rows),
        extrapolated=limit,
        converged=bool(converged),
    )


# ---------------------------------------------------------------------------
# Reduced one-dimensional oscillator integral
# ---------------------------------------------------------------------------

def euler_integral_ho_reduced(k_spring: float, E: float, q0: float) -> float:
    """Closed form k q0 / (k q0^2 - 2 E) of the reduced oscillator integral.

    The reduction integrates the two-dimensional density over the free
    transverse direction with the conventional constant pi (see
    ``ho_reduced_quadrature``), then over q in [-q0, q0].
    """
    denom = k_spring * q0**2 - 2.0 * E
    if math.isinf(q0):
        return 0.0
    if denom == 0.0:
        raise DomainError("q0 sits exactly at the turning point: integral is singular")
    return k_spring * q0 / denom


def ho_reduced_quadrature(
    k_spring: float,
    E: float,
    q0: float,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    angular_factor: float = math.pi,
) -> QuadratureResult:
    """Quadrature of -(k / 4 pi) (E + k q^2 / 2) / (E - k q^2 / 2)^2 over [-q0, q0].

    ``angular_factor`` makes the transverse-direction convention explicit;
    the default pi reproduces the closed form above.
    """
    if 0.5 * k_spring * q0**2 >= E:
        raise DomainError(
            "quadrature requires q0 strictly inside the allowed interval; "
            "the integrand is singular at the turning points"
        )

    def integrand(q):
        q = np.asarray(q, dtype=float)
        return -(k_spring / (4.0 * math.pi)) * (E + 0.5 * k_spring * q**2) / (
            (E - 0.5 * k_spring * q**2) ** 2
        )

    res = adaptive_gauss(integrand, -q0, q0, rtol=rtol, atol=atol)
    return QuadratureResult(angular_factor * res.value, angular_factor * res.error, res.neval)
