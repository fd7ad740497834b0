"""Jacobi metric, orthonormal coframe, connection and curvature forms.

The Jacobi metric h = 2 (E - V) g turns fixed-energy trajectories into
geodesics on the allowed region.  This module builds an orthonormal coframe
theta^a for h, solves the torsion-free structure equation
d theta^a = -omega^a_b ^ theta^b for the so(k)-valued connection, and forms
the curvature R = d omega + omega ^ omega.

Two computational routes are provided and cross-validate each other:

* a closed-form route for conformally flat metrics (Cartesian kinetic term),
  expressed through phi = ln[2 m (E - V)];
* a Cartan pipeline that works for any coframe field, with exterior
  derivatives taken either from analytic field derivatives (when the metric
  and potential supply them) or from central finite differences.

Index conventions used throughout (k = dimension, all arrays float):

* coframe matrix ``A[a, alpha]``:  theta^a = A[a, alpha] dq^alpha,
* connection coefficients ``omega[a, b, c]``: omega_ab = omega[a,b,c] theta^c,
* curvature coefficients ``R[a, b, c, d]``: R_ab = (1/2) R[a,b,c,d] theta^c ^ theta^d,
* coordinate two-form matrices ``M[a, b, alpha, beta]`` with the same 1/2
  convention in dq^alpha ^ dq^beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import findiff
from .errors import DimensionError, DomainError
from .scalar_fields import (
    CartesianMassMetric,
    FreePotential,
    MechanicalSystem,
    PolarKineticMetric,
    potential_gradient,
    potential_hessian,
)

__all__ = [
    "JacobiMetricPoint",
    "Coframe",
    "ConnectionForm",
    "CurvatureForm",
    "FrameRotation",
    "CocycleReport",
    "CompatibilityReport",
    "jacobi_metric",
    "coframe_at",
    "connection_one_form",
    "curvature_two_form",
    "transform_frame",
    "check_cocycle",
    "check_compatibility",
    "first_structure_residual",
    "second_structure_residual",
    "conformal_phi",
    "conformal_phi_gradient",
    "conformal_phi_hessian",
    "coframe_field_for",
    "rotated_field",
    "cartan_connection_from_field",
    "cartan_curvature_from_field",
    "random_rotation",
]

MAX_CURVATURE_DIMENSION = 4


# ---------------------------------------------------------------------------
# Point data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JacobiMetricPoint:
    """Jacobi metric evaluated at a configuration point."""

    system: MechanicalSystem
    q: np.ndarray
    h: np.ndarray
    conformal: bool
    phi: float | None

    @property
    def k(self) -> int:
        return self.q.size


def jacobi_metric(system: MechanicalSystem, q) -> JacobiMetricPoint:
    """h = 2 (E - V) g at q; raises DomainError outside the allowed region."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != system.k:
        raise DimensionError(f"point of size {q.size} for a {system.k}-dimensional system")
    weight = system.conformal_weight(q)
    h = weight * system.metric.matrix(q)
    conformal = isinstance(system.metric, CartesianMassMetric)
    phi = math.log(weight * system.metric.mass) if conformal else None
    return JacobiMetricPoint(system=system, q=q, h=h, conformal=conformal, phi=phi)


def conformal_phi(system: MechanicalSystem, q) -> float:
    """phi = ln[2 m (E - V)] for Cartesian kinetic metrics."""
    if not isinstance(system.metric, CartesianMassMetric):
        raise DomainError("phi is defined only for the Cartesian mass metric")
    return math.log(system.conformal_weight(q) * system.metric.mass)


def conformal_phi_gradient(system: MechanicalSystem, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    margin = system.sigma_margin(q)
    if margin <= 0:
        raise DomainError("point outside the allowed region")
    return -potential_gradient(system.potential, q) / margin


def conformal_phi_hessian(system: MechanicalSystem, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    margin = system.sigma_margin(q)
    if margin <= 0:
        raise DomainError("point outside the allowed region")
    grad = potential_gradient(system.potential, q)
    hess = potential_hessian(system.potential, q)
    return -hess / margin - np.outer(grad, grad) / margin**2


# ---------------------------------------------------------------------------
# Coframe fields
# ---------------------------------------------------------------------------

class CoframeField:
    """A q-dependent coframe matrix with optional analytic derivatives.

    ``derivative`` returns dA[a, alpha, gamma] = d A[a, alpha] / d q^gamma and
    ``second_derivative`` returns d2A[a, alpha, beta, gamma]; either may
    return None, in which case finite differences are used.
    """

    def __init__(self, system: MechanicalSystem):
        self.system = system

    def matrix(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, q: np.ndarray):
        return None

    def second_derivative(self, q: np.ndarray):
        return None


class ConformalCoframeField(CoframeField):
    """theta^a = e^{phi/2} dq^a for conformally flat Jacobi metrics."""

    def matrix(self, q):
        return math.exp(0.5 * conformal_phi(self.system, q)) * np.eye(self.system.k)

    def derivative(self, q):
        k = self.system.k
        ef = math.exp(0.5 * conformal_phi(self.system, q))
        f1 = 0.5 * conformal_phi_gradient(self.system, q)
        out = np.zeros((k, k, k))
        for a in range(k):
            out[a, a, :] = ef * f1
        return out

    def second_derivative(self, q):
        k = self.system.k
        ef = math.exp(0.5 * conformal_phi(self.system, q))
        f1 = 0.5 * conformal_phi_gradient(self.system, q)
        f2 = 0.5 * conformal_phi_hessian(self.system, q)
        block = ef * (f2 + np.outer(f1, f1))
        out = np.zeros((k, k, k, k))
        for a in range(k):
            out[a, a, :, :] = block
        return out


def _radial_potential_derivatives(system: MechanicalSystem, r: float):
    """(V, V', V'') for free or radial-chart central potentials."""
    pot = system.potential
    if isinstance(pot, FreePotential):
        return 0.0, 0.0, 0.0
    if hasattr(pot, "radial_value") and getattr(pot, "chart", None) == "radial":
        return pot.radial_value(r), pot.radial_derivative(r), pot.radial_second_derivative(r)
    raise DomainError("system does not expose a radial potential profile")


class PolarCentralCoframeField(CoframeField):
    """Diagonal coframe for a central field in polar coordinates.

    theta^r = a1 dr and theta^theta = a1 r dtheta with
    a1 = sqrt(2 m (E - V(r))).
    """

    def _pieces(self, q):
        r = float(q[0])
        if r <= 0:
            raise DomainError("polar chart requires r > 0")
        m = self.system.metric.mass
        V, dV, d2V = _radial_potential_derivatives(self.system, r)
        margin = self.system.energy - V
        if margin <= 0:
            raise DomainError("point outside the allowed region")
        a1 = math.sqrt(2.0 * m * margin)
        da1 = -m * dV / a1
        d2a1 = -m * d2V / a1 - (m * dV) ** 2 / a1**3
        return r, a1, da1, d2a1

    def matrix(self, q):
        r, a1, _, _ = self._pieces(np.asarray(q, dtype=float))
        return np.diag([a1, a1 * r])

    def derivative(self, q):
        r, a1, da1, _ = self._pieces(np.asarray(q, dtype=float))
        out = np.zeros((2, 2, 2))
        out[0, 0, 0] = da1
        out[1, 1, 0] = da1 * r + a1
        return out

    def second_derivative(self, q):
        r, a1, da1, d2a1 = self._pieces(np.asarray(q, dtype=float))
        out = np.zeros((2, 2, 2, 2))
        out[0, 0, 0, 0] = d2a1
        out[1, 1, 0, 0] = d2a1 * r + 2.0 * da1
        return out


class CholeskyCoframeField(CoframeField):
    """Generic coframe from the Cholesky factor of h; derivatives by FD."""

    def matrix(self, q):
        q = np.asarray(q, dtype=float)
        h = self.system.conformal_weight(q) * self.system.metric.matrix(q)
        try:
            lower = np.linalg.cholesky(h)
        except np.linalg.LinAlgError as exc:
            raise DomainError(f"Jacobi metric not positive definite at {q}") from exc
        return lower.T


class RotatedCoframeField(CoframeField):
    """A coframe field composed with a constant frame rotation."""

    def __init__(self, base: CoframeField, rotation: np.ndarray):
        super().__init__(base.system)
        self.base = base
        self.rotation = np.asarray(rotation, dtype=float)

    def matrix(self, q):
        return self.rotation @ self.base.matrix(q)

    def derivative(self, q):
        d = self.base.derivative(q)
        return None if d is None else np.einsum("ae,exg->axg", self.rotation, d)

    def second_derivative(self, q):
        d2 = self.base.second_derivative(q)
        return None if d2 is None else np.einsum("ae,exbg->axbg", self.rotation, d2)


def coframe_field_for(system: MechanicalSystem) -> CoframeField:
    if isinstance(system.metric, CartesianMassMetric):
        return ConformalCoframeField(system)
    if isinstance(system.metric, PolarKineticMetric):
        try:
            _radial_potential_derivatives(system, 1.0)
        except (DomainError, NotImplementedError):
            return CholeskyCoframeField(system)
        return PolarCentralCoframeField(system)
    return CholeskyCoframeField(system)


def rotated_field(field: CoframeField, rotation: "FrameRotation | np.ndarray") -> CoframeField:
    matrix = rotation.matrix if isinstance(rotation, FrameRotation) else rotation
    return RotatedCoframeField(field, matrix)


# ---------------------------------------------------------------------------
# Coframe, connection, curvature containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Coframe:
    point: JacobiMetricPoint
    matrix: np.ndarray  # A[a, alpha]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def reproduces_metric(self, rtol: float = 1e-12) -> bool:
        h = self.point.h
        rebuilt = self.matrix.T @ self.matrix
        return bool(np.allclose(rebuilt, h, rtol=rtol, atol=rtol * np.abs(h).max()))


def coframe_at(point: JacobiMetricPoint) -> Coframe:
    """Orthonormal coframe with A^T A = h.

    Diagonal metrics get the gauge theta^a = sqrt(h_aa) dq^a; otherwise the
    transposed Cholesky factor is used.
    """
    h = point.h
    off = h - np.diag(np.diag(h))
    if np.abs(off).max() <= 1e-14 * np.abs(h).max():
        diag = np.diag(h)
        if np.any(diag <= 0):
            raise DomainError("Jacobi metric not positive definite")
        return Coframe(point, np.diag(np.sqrt(diag)))
    try:
        lower = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise DomainError("Jacobi metric not positive definite") from exc
    return Coframe(point, lower.T)


@dataclass(frozen=True, eq=False)
class ConnectionForm:
    coframe: Coframe
    coeffs: np.ndarray  # omega[a, b, c], antisymmetric in (a, b)

    def coordinate_components(self) -> np.ndarray:
        """W[a, b, alpha] with omega_ab = W[a, b, alpha] dq^alpha."""
        return np.einsum("abc,cx->abx", self.coeffs, self.coframe.matrix)


@dataclass(frozen=True, eq=False)
class CurvatureForm:
    coframe: Coframe
    coeffs: np.ndarray  # R[a, b, c, d]

    def coordinate_components(self) -> np.ndarray:
        """M[a, b, alpha, beta] with R_ab = (1/2) M dq^alpha ^ dq^beta."""
        A = self.coframe.matrix
        return np.einsum("abcd,cx,dy->abxy", self.coeffs, A, A)


@dataclass(frozen=True, eq=False)
class FrameRotation:
    """Element of SO(k), optionally with its coordinate derivative.

    ``derivative[.., gamma]`` is d Lambda / d q^gamma; zero (None) for
    constant rotations.
    """

    matrix: np.ndarray
    derivative: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("rotation must be a square matrix")
        if not np.allclose(m.T @ m, np.eye(m.shape[0]), atol=1e-12):
            raise ValueError("rotation matrix is not orthogonal to 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("rotation must have determinant +1")

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


def random_rotation(k: int, rng: np.random.Generator) -> FrameRotation:
    mat = rng.standard_normal((k, k))
    qmat, r = np.linalg.qr(mat)
    qmat = qmat @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(qmat) < 0:
        qmat[:, 0] = -qmat[:, 0]
    return FrameRotation(qmat)


# ---------------------------------------------------------------------------
# Cartan pipeline
# ---------------------------------------------------------------------------

def _field_derivative(field: CoframeField, q: np.ndarray, force_fd: bool) -> np.ndarray:
    if not force_fd:
        dA = field.derivative(q)
        if dA is not None:
            return dA
    return findiff.array_jacobian(field.matrix, q, findiff.geometry_step(q))


def _connection_pieces(field: CoframeField, q: np.ndarray, force_fd: bool):
    A = field.matrix(q)
    dA = _field_derivative(field, q, force_fd)
    B = np.linalg.inv(A)
    F = dA.transpose(0, 2, 1) - dA
    C = np.einsum("axy,xb,yc->abc", F, B, B)
    # omega[a,b,c] = (C[a,b,c] + C[b,c,a] - C[c,a,b]) / 2
    omega = 0.5 * (C + C.transpose(2, 0, 1) - C.transpose(1, 2, 0))
    # so(k)-antisymmetry holds analytically; make it bit-exact
    omega = 0.5 * (omega - omega.transpose(1, 0, 2))
    W = np.einsum("abc,cx->abx", omega, A)
    return A, dA, B, omega, W


def cartan_connection_from_field(
    field: CoframeField, q, force_fd: bool = False
) -> ConnectionForm:
    """Solve the first structure equation for the given coframe field."""
    q = np.asarray(q, dtype=float)
    point = jacobi_metric(field.system, q)
    A, _, _, omega, _ = _connection_pieces(field, q, force_fd)
    return ConnectionForm(Coframe(point, A), omega)


def _analytic_connection_derivative(field: CoframeField, q: np.ndarray):
    """Exact dW[a, b, alpha, gamma] when the field has second derivatives."""
    dA = field.derivative(q)
    d2A = field.second_derivative(q)
    if dA is None or d2A is None:
        return None
    A = field.matrix(q)
    B = np.linalg.inv(A)
    k = A.shape[0]
    F = dA.transpose(0, 2, 1) - dA
    C = np.einsum("axy,xb,yc->abc", F, B, B)
    omega = 0.5 * (C + C.transpose(2, 0, 1) - C.transpose(1, 2, 0))
    dB = np.empty((k, k, k))
    for g in range(k):
        dB[:, :, g] = -B @ dA[:, :, g] @ B
    dF = d2A.transpose(0, 2, 1, 3) - d2A
    dC = (
        np.einsum("axyd,xb,yc->abcd", dF, B, B)
        + np.einsum("axy,xbd,yc->abcd", F, dB, B)
        + np.einsum("axy,xb,ycd->abcd", F, B, dB)
    )
    domega = 0.5 * (dC + dC.transpose(2, 0, 1, 3) - dC.transpose(1, 2, 0, 3))
    dW = np.einsum("abcd,cx->abxd", domega, A) + np.einsum("abc,cxd->abxd", omega, dA)
    return dW


def cartan_curvature_from_field(
    field: CoframeField, q, force_fd: bool = False
) -> CurvatureForm:
    """R = d omega + omega ^ omega for the given coframe field.

    The exterior derivative of omega uses the analytic chain when the field
    provides second derivatives (and force_fd is not set); otherwise the
    connection field is differenced with the geometry step.
    """
    q = np.asarray(q, dtype=float)
    point = jacobi_metric(field.system, q)
    A, _, _, _, W = _connection_pieces(field, q, force_fd)
    dW = None
    if not force_fd:
        dW = _analytic_connection_derivative(field, q)
    if dW is None:
        def w_field(p):
            return _connection_pieces(field, p, force_fd)[4]

        dW = findiff.array_jacobian(w_field, q, findiff.geometry_step(q))
    ww = np.einsum("acx,cby->abxy", W, W)
    M = dW.transpose(0, 1, 3, 2) - dW + ww - ww.transpose(0, 1, 3, 2)
    B = np.linalg.inv(A)
    coeffs = np.einsum("abxy,xc,yd->abcd", M, B, B)
    coeffs = 0.5 * (coeffs - coeffs.transpose(1, 0, 2, 3))
    coeffs = 0.5 * (coeffs - coeffs.transpose(0, 1, 3, 2))
    return CurvatureForm(Coframe(point, A), coeffs)


# ---------------------------------------------------------------------------
# Connection and curvature operations
# ---------------------------------------------------------------------------

def _require_curvature_dimension(k: int) -> None:
    if not 2 <= k <= MAX_CURVATURE_DIMENSION:
        raise DimensionError(
            f"frame machinery supports dimensions 2..{MAX_CURVATURE_DIMENSION}, got {k}"
        )


def connection_one_form(point: JacobiMetricPoint, branch: str = "auto") -> ConnectionForm:
    """Connection omega_ab solving d theta^a = -omega^a_b ^ theta^b.

    Branches: "conformal" (closed form, Cartesian metrics), "cartan"
    (structure-equation solve with analytic field derivatives where
    available), "cartan_fd" (pure finite differences), "auto".
    """
    _require_curvature_dimension(point.k)
    system = point.system
    if branch == "auto":
        branch = "conformal" if point.conformal else "cartan"
    if branch == "conformal":
        if not point.conformal:
            raise DomainError("conformal branch requires a Cartesian kinetic metric")
        k = point.k
        f1 = 0.5 * conformal_phi_gradient(system, point.q)
        scale = math.exp(-0.5 * point.phi)
        omega = np.zeros((k, k, k))
        for a in range(k):
            for b in range(k):
                for c in range(k):
                    omega[a, b, c] = scale * (
                        f1[b] * (1.0 if a == c else 0.0) - f1[a] * (1.0 if b == c else 0.0)
                    )
        return ConnectionForm(coframe_at(point), omega)
    if branch in ("cartan", "cartan_fd"):
        field = coframe_field_for(system)
        return cartan_connection_from_field(field, point.q, force_fd=(branch == "cartan_fd"))
    raise ValueError(f"unknown branch {branch!r}")


def _conformal_curvature_coordinates(system: MechanicalSystem, q: np.ndarray) -> np.ndarray:
    """M[a, b, alpha, beta] for h = e^phi * delta, from phi derivatives."""
    k = q.size
    f1 = 0.5 * conformal_phi_gradient(system, q)
    f2 = 0.5 * conformal_phi_hessian(system, q)
    norm2 = float(np.dot(f1, f1))
    M = np.zeros((k, k, k, k))

    def add(mat, i, j, value):
        if i == j or value == 0.0:
            return
        mat[i, j] += value
        mat[j, i] -= value

    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            mat = M[a, b]
            for beta in range(k):
                add(mat, beta, a, f2[b, beta])
                add(mat, beta, b, -f2[a, beta])
            for c in range(k):
                add(mat, a, c, f1[b] * f1[c])
                add(mat, c, b, f1[a] * f1[c])
            add(mat, a, b, -norm2)
    return M


def curvature_two_form(point: JacobiMetricPoint, branch: str = "auto") -> CurvatureForm:
    """Curvature R_ab = d omega_ab + omega_ac ^ omega_cb.

    In two dimensions the conformal branch reduces to the Gaussian-curvature
    form: the dq^1 ^ dq^2 coefficient of R_12 equals -(1/2) Laplacian(phi).
    """
    _require_curvature_dimension(point.k)
    system = point.system
    if branch == "auto":
        branch = "conformal" if point.conformal else "cartan"
    if branch == "conformal":
        if not point.conformal:
            raise DomainError("conformal branch requires a Cartesian kinetic metric")
        M = _conformal_curvature_coordinates(system, point.q)
        frame = coframe_at(point)
        B = frame.inverse
        coeffs = np.einsum("abxy,xc,yd->abcd", M, B, B)
        coeffs = 0.5 * (coeffs - coeffs.transpose(1, 0, 2, 3))
        coeffs = 0.5 * (coeffs - coeffs.transpose(0, 1, 3, 2))
        return CurvatureForm(frame, coeffs)
    if branch in ("cartan", "cartan_fd"):
        field = coframe_field_for(system)
        return cartan_curvature_from_field(field, point.q, force_fd=(branch == "cartan_fd"))
    raise ValueError(f"unknown branch {branch!r}")


def transform_frame(obj, rotation: FrameRotation):
    """Apply theta' = Lambda theta: omega' = L omega L^-1 + L dL^-1, R' = L R L^-1."""
    if isinstance(obj, ConnectionForm):
        L = rotation.matrix
        if L.shape[0] != obj.coframe.matrix.shape[0]:
            raise DimensionError("rotation dimension does not match the frame")
        W = obj.coordinate_components()
        k = L.shape[0]
        Wp = np.einsum("ae,ebx,fb->afx", L, W, L)
        if rotation.derivative is not None:
            dL = np.asarray(rotation.derivative, dtype=float)
            # L d(L^-1) = -(dL) L^T for orthogonal L
            for g in range(dL.shape[2]):
                Wp[:, :, g] += -(dL[:, :, g] @ L.T)
        new_cof = Coframe(obj.coframe.point, L @ obj.coframe.matrix)
        coeffs = np.einsum("abx,xc->abc", Wp, np.linalg.inv(new_cof.matrix))
        return ConnectionForm(new_cof, coeffs)
    if isinstance(obj, CurvatureForm):
        L = rotation.matrix
        if L.shape[0] != obj.coframe.matrix.shape[0]:
            raise DimensionError("rotation dimension does not match the frame")
        M = obj.coordinate_components()
        Mp = np.einsum("ae,ebxy,fb->afxy", L, M, L)
        new_cof = Coframe(obj.coframe.point, L @ obj.coframe.matrix)
        B = np.linalg.inv(new_cof.matrix)
        coeffs = np.einsum("abxy,xc,yd->abcd", Mp, B, B)
        return CurvatureForm(new_cof, coeffs)
    raise TypeError("transform_frame accepts ConnectionForm or CurvatureForm")


# ---------------------------------------------------------------------------
# Bundle-consistency diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CocycleReport:
    rows: tuple[tuple[object, object, object, float], ...]
    tolerance: float

    @property
    def max_defect(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_defect < self.tolerance

    def to_text(self) -> str:
        lines = [f"{'i':>6} {'k':>6} {'j':>6} {'defect':>12}"]
        for i, k, j, defect in self.rows:
            lines.append(f"{i!s:>6} {k!s:>6} {j!s:>6} {defect:12.3e}")
        lines.append(f"max defect {self.max_defect:.3e} (tol {self.tolerance:.1e}): "
                     + ("pass" if self.passed else "fail"))
        return "\n".join(lines)


def check_cocycle(rotations: Mapping, tolerance: float = 1e-10) -> CocycleReport:
    """Check Lambda_ik Lambda_kj = Lambda_ij over all triples present."""
    mats = {
        key: (value.matrix if isinstance(value, FrameRotation) else np.asarray(value, dtype=float))
        for key, value in rotations.items()
    }
    rows = []
    for (i, k1) in mats:
        for (k2, j) in mats:
            if k1 != k2 or (i, j) not in mats:
                continue
            defect = float(np.abs(mats[(i, k1)] @ mats[(k2, j)] - mats[(i, j)]).max())
            rows.append((i, k1, j, defect))
    return CocycleReport(tuple(rows), tolerance)


@dataclass(frozen=True, eq=False)
class CompatibilityReport:
    residual: np.ndarray
    tolerance: float

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.residual).max()) if self.residual.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def to_text(self) -> str:
        return (
            f"compatibility residual max {self.max_residual:.3e} "
            f"(tol {self.tolerance:.1e}): " + ("pass" if self.passed else "fail")
        )


def check_compatibility(
    omega_i: ConnectionForm,
    omega_j: ConnectionForm,
    rotation: FrameRotation,
    tolerance: float = 1e-10,
) -> CompatibilityReport:
    """Residual of omega_i - (L omega_j L^-1 + L dL^-1) in coordinates."""
    transformed = transform_frame(omega_j, rotation)
    residual = omega_i.coordinate_components() - transformed.coordinate_components()
    return CompatibilityReport(residual, tolerance)


# ---------------------------------------------------------------------------
# Structure-equation residuals (finite-difference oracles)
# ---------------------------------------------------------------------------

def first_structure_residual(
    system: MechanicalSystem, q, branch: str = "auto", step_scale: float = 1e-5
) -> float:
    """Max coefficient of d theta^a + omega^a_b ^ theta^b, d theta by FD."""
    q = np.asarray(q, dtype=float)
    point = jacobi_metric(system, q)
    conn = connection_one_form(point, branch)
    field = coframe_field_for(system)
    A = field.matrix(q)
    dA = findiff.array_jacobian(field.matrix, q, findiff.geometry_step(q, step_scale))
    F = dA.transpose(0, 2, 1) - dA
    W = conn.coordinate_components()
    wedge = np.einsum("abx,by->axy", W, A)
    residual = F + wedge - wedge.transpose(0, 2, 1)
    return float(np.abs(residual).max())


def second_structure_residual(
    system: MechanicalSystem, q, branch: str = "auto", step_scale: float = 1e-5
) -> float:
    """Max difference between R and d omega + omega ^ omega with FD d omega."""
    q = np.asarray(q, dtype=float)
    point = jacobi_metric(system, q)
    curv = curvature_two_form(point, branch)

    def w_field(p):
        return connection_one_form(jacobi_metric(system, p), branch).coordinate_components()

    W = w_field(q)
    dW = findiff.array_jacobian(w_field, q, findiff.geometry_step(q, step_scale))
    ww = np.einsum("acx,cby->abxy", W, W)
    M_fd = dW.transpose(0, 1, 3, 2) - dW + ww - ww.transpose(0, 1, 3, 2)
    return float(np.abs(M_fd - curv.coordinate_components()).max())
