"""Newtonian and Jacobi-geodesic dynamics, parameter maps, reduced action.

The same fixed-energy motion can be integrated two ways:

* ``integrate_newton``: qddot^a + Gamma^a_bc qdot^b qdot^c + g^{ab} dV_b = 0
  in physical time t, with the Levi-Civita symbols of the kinetic metric g;
* ``integrate_geodesic``: the geodesic equation of the Jacobi metric
  h = 2 (E - V) g in its arc-length parameter.

The two parametrizations are related by ds/dt = 2 (E - V), implemented by
``reparametrize``.  ``maupertuis_action`` evaluates the reduced action three
independent ways (momentum route, energy route, mixed speed route), which
agree exactly when energy is conserved along the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import solve_ivp

from . import findiff
from .errors import DimensionError, DomainError
from .quadrature import cumulative_integral
from .scalar_fields import MechanicalSystem, potential_gradient

__all__ = [
    "NewtonianState",
    "GeodesicState",
    "Trajectory",
    "ActionEvaluations",
    "integrate_newton",
    "integrate_geodesic",
    "reparametrize",
    "maupertuis_action",
    "first_variation_check",
    "launch_state",
    "jacobi_path_length",
]

FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True, eq=False)
class NewtonianState:
    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class GeodesicState:
    q: np.ndarray
    qprime: np.ndarray
    stilde: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "qprime", np.asarray(self.qprime, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled trajectory with its parametrization and integrator metadata.

    ``parameterization`` is "t" (physical time) or "stilde" (Jacobi arc
    length); velocities are derivatives with respect to that parameter.
    """

    system: MechanicalSystem
    kind: str
    parameterization: str
    params: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energies: np.ndarray
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.params) <= 0):
            raise ValueError("trajectory parameter must be strictly increasing")

    @property
    def k(self) -> int:
        return self.positions.shape[1]

    def to_csv_text(self) -> str:
        k = self.k
        header = "param," + ",".join(f"q{i+1}" for i in range(k))
        header += "," + ",".join(f"v{i+1}" for i in range(k)) + ",energy"
        lines = [header]
        for i in range(self.params.size):
            row = [self.params[i], *self.positions[i], *self.velocities[i], self.energies[i]]
            lines.append(",".join(FLOAT_FORMAT % v for v in row))
        return "\n".join(lines) + "\n"


def _hamiltonian(system: MechanicalSystem, q: np.ndarray, qdot: np.ndarray) -> float:
    g = system.metric.matrix(q)
    return 0.5 * float(qdot @ g @ qdot) + system.potential_value(q)


def launch_state(system: MechanicalSystem, q, direction) -> NewtonianState:
    """Newtonian state at q moving along ``direction`` with H = E."""
    q = np.asarray(q, dtype=float)
    direction = np.asarray(direction, dtype=float)
    margin = system.sigma_margin(q)
    if margin <= 0:
        raise DomainError("launch point outside the allowed region")
    g = system.metric.matrix(q)
    norm2 = float(direction @ g @ direction)
    if norm2 <= 0:
        raise ValueError("launch direction must be nonzero")
    speed = math.sqrt(2.0 * margin / norm2)
    return NewtonianState(q=q, qdot=speed * direction)


def _jacobi_matrix_fn(system: MechanicalSystem):
    def h_of(q: np.ndarray) -> np.ndarray:
        return system.conformal_weight(q) * system.metric.matrix(q)

    return h_of


def _jacobi_christoffels(system: MechanicalSystem, q: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols of h from finite differences of its components.

    Close to the boundary the stencil is shrunk so that it never leaves the
    allowed region; the metric itself degenerates there and integration is
    stopped by the boundary event before the stencil noise matters.
    """
    h_of = _jacobi_matrix_fn(system)
    margin = system.sigma_margin(q)
    if margin <= 0:
        raise DomainError("point outside the allowed region")
    step = findiff.geometry_step(q, 1e-6)
    if margin < 1e-2:
        step = min(step, 0.2 * margin)
    dh = findiff.array_jacobian(h_of, q, step)
    hinv = np.linalg.inv(h_of(q))
    combo = dh + dh.transpose(0, 2, 1) - dh.transpose(2, 1, 0)
    return 0.5 * np.einsum("ad,dcb->abc", hinv, combo)


def _solve(system, rhs, y0, span, tol, samples, eps_stop, eval_params):
    def boundary(t, y):
        try:
            return system.sigma_margin(y[: system.k]) - eps_stop
        except DomainError:
            return -eps_stop

    boundary.terminal = True
    boundary.direction = -1.0

    def guarded_rhs(t, y):
        # NaN makes the solver reject the trial step and shrink; it is the
        # backstop for trial states that leave the allowed region
        try:
            return rhs(t, y)
        except DomainError:
            return np.full(y.shape, np.nan)

    sol = solve_ivp(
        guarded_rhs,
        span,
        y0,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        dense_output=True,
        events=[boundary],
    )
    if sol.status == -1:
        # step-size underflow right at the degenerate boundary counts as a
        # boundary halt; anything else is a genuine failure
        try:
            final_margin = system.sigma_margin(sol.y[: system.k, -1])
        except DomainError:
            final_margin = -1.0
        if sol.t[-1] > span[0] and final_margin <= max(1e4 * eps_stop, 1e-4 * abs(system.energy)):
            sol.status = 1
        else:
            raise DomainError(f"integration failed: {sol.message}")
    boundary_hit = sol.status == 1
    end = sol.t[-1]
    if eval_params is not None:
        grid = np.asarray(eval_params, dtype=float)
        if grid.max() > end + 1e-12:
            raise DomainError(
                f"requested parameter {grid.max()} beyond integration end {end}"
            )
        grid = np.clip(grid, span[0], end)
    else:
        grid = np.linspace(span[0], end, samples)
    states = sol.sol(grid)
    return grid, states, boundary_hit, sol.nfev


def integrate_newton(
    system: MechanicalSystem,
    initial: NewtonianState,
    t_end: float,
    tol: float = 1e-10,
    samples: int = 2000,
    eps_stop: float | None = None,
    eval_params=None,
) -> Trajectory:
    """Adaptive embedded Runge-Kutta integration of the Newtonian equations.

    Halts with a boundary event when an integration step resolves
    E - V < ``eps_stop`` (default 1e-8 |E|), where the Jacobi metric
    degenerates.  Exact tangential touches of the boundary are narrower than
    the solver step and are traversed; the time-domain equations stay
    regular there.  Pass ``eps_stop=0.0`` to disable the halt entirely.
    """
    k = system.k
    if initial.q.size != k or initial.qdot.size != k:
        raise DimensionError("initial state dimension mismatch")
    # boundary starts (zero velocity at a turning point) are regular for the
    # time-domain equations, so only strictly forbidden points are rejected
    if system.sigma_margin(initial.q) < 0:
        raise DomainError("initial point outside the allowed region")
    if eps_stop is None:
        eps_stop = 1e-8 * abs(system.energy)
    metric, potential = system.metric, system.potential

    def rhs(t, y):
        q, v = y[:k], y[k:]
        gamma = metric.christoffels(q)
        acc = -np.einsum("abc,b,c->a", gamma, v, v)
        acc -= metric.inverse(q) @ potential_gradient(potential, q)
        return np.concatenate([v, acc])

    y0 = np.concatenate([initial.q, initial.qdot])
    grid, states, boundary_hit, nfev = _solve(
        system, rhs, y0, (initial.t, initial.t + t_end), tol, samples, eps_stop, eval_params
    )
    qs = states[:k].T
    vs = states[k:].T
    energies = np.array([_hamiltonian(system, qs[i], vs[i]) for i in range(grid.size)])
    drift = float(np.abs(energies - system.energy).max() / max(abs(system.energy), 1e-300))
    return Trajectory(
        system=system,
        kind="newton",
        parameterization="t",
        params=grid,
        positions=qs,
        velocities=vs,
        energies=energies,
        metadata={
            "method": "DOP853",
            "tol": tol,
            "nfev": nfev,
            "boundary_hit": boundary_hit,
            "energy_drift": drift,
        },
    )


def integrate_geodesic(
    system: MechanicalSystem,
    initial: GeodesicState,
    s_end: float,
    tol: float = 1e-10,
    samples: int = 2000,
    eps_stop: float | None = None,
    eval_params=None,
) -> Trajectory:
    """Geodesic of the Jacobi metric, unit-speed normalized.

    The initial derivative is rescaled so that h(q', q') = 1, making the
    affine parameter the Jacobi arc length; its drift along the run is
    recorded in the metadata.
    """
    k = system.k
    if initial.q.size != k or initial.qprime.size != k:
        raise DimensionError("initial state dimension mismatch")
    if not system.sigma_margin(initial.q) > 0:
        raise DomainError("initial point outside the allowed region")
    if eps_stop is None:
        eps_stop = 1e-8 * abs(system.energy)
    h_of = _jacobi_matrix_fn(system)
    norm2 = float(initial.qprime @ h_of(initial.q) @ initial.qprime)
    if norm2 <= 0:
        raise ValueError("initial direction must be nonzero")
    qprime0 = initial.qprime / math.sqrt(norm2)

    def rhs(s, y):
        q, v = y[:k], y[k:]
        gamma = _jacobi_christoffels(system, q)
        acc = -np.einsum("abc,b,c->a", gamma, v, v)
        return np.concatenate([v, acc])

    y0 = np.concatenate([initial.q, qprime0])
    grid, states, boundary_hit, nfev = _solve(
        system, rhs, y0, (initial.stilde, initial.stilde + s_end), tol, samples, eps_stop, eval_params
    )
    qs = states[:k].T
    vs = states[k:].T
    speeds = np.array([float(vs[i] @ h_of(qs[i]) @ vs[i]) for i in range(grid.size)])
    energies = np.empty(grid.size)
    for i in range(grid.size):
        w = system.conformal_weight(qs[i])
        energies[i] = _hamiltonian(system, qs[i], w * vs[i])
    return Trajectory(
        system=system,
        kind="geodesic",
        parameterization="stilde",
        params=grid,
        positions=qs,
        velocities=vs,
        energies=energies,
        metadata={
            "method": "DOP853",
            "tol": tol,
            "nfev": nfev,
            "boundary_hit": boundary_hit,
            "unit_speed_drift": float(np.abs(speeds - 1.0).max()),
        },
    )


def reparametrize(trajectory: Trajectory, direction: str, eps: float = 1e-12) -> Trajectory:
    """Convert between time and Jacobi arc-length parametrizations.

    Cumulative quadrature of ds = 2 (E - V) dt (or its reciprocal) over the
    sample grid; fails if any sample has E - V <= eps.
    """
    system = trajectory.system
    weights = 2.0 * np.array(
        [system.sigma_margin(qi) for qi in trajectory.positions]
    )
    if np.any(weights <= 2.0 * eps):
        raise DomainError("trajectory touches the boundary: E - V <= eps at a sample")
    if direction == "t_to_stilde":
        if trajectory.parameterization != "t":
            raise ValueError("t_to_stilde needs a time-parametrized trajectory")
        new_params = cumulative_integral(trajectory.params, weights)
        new_velocities = trajectory.velocities / weights[:, None]
        new_parameterization = "stilde"
    elif direction == "stilde_to_t":
        if trajectory.parameterization != "stilde":
            raise ValueError("stilde_to_t needs an arc-length parametrized trajectory")
        new_params = cumulative_integral(trajectory.params, 1.0 / weights)
        new_velocities = trajectory.velocities * weights[:, None]
        new_parameterization = "t"
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return Trajectory(
        system=system,
        kind=trajectory.kind,
        parameterization=new_parameterization,
        params=new_params,
        positions=trajectory.positions,
        velocities=new_velocities,
        energies=trajectory.energies,
        metadata={**dict(trajectory.metadata), "reparametrized": direction},
    )


@dataclass(frozen=True)
class ActionEvaluations:
    """The reduced action evaluated by three independent quadratures."""

    momentum_route: float       # integral of p_a dq^a using sampled velocities
    energy_route: float         # integral of 2 (E - V) dt using the potential
    mixed_route: float          # integral of sqrt(2T) ds mixing both

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.momentum_route, self.energy_route, self.mixed_route)

    @property
    def max_relative_spread(self) -> float:
        vals = self.values
        scale = max(max(abs(v) for v in vals), 1e-300)
        return (max(vals) - min(vals)) / scale


def maupertuis_action(trajectory: Trajectory) -> ActionEvaluations:
    """Evaluate the reduced action along a time-parametrized trajectory.

    momentum route: g(qdot, qdot) dt; energy route: 2 (E - V) dt; mixed
    route: sqrt(2 (E - V)) sqrt(g(qdot, qdot)) dt.
    """
    if trajectory.parameterization != "t":
        raise ValueError("the reduced action is evaluated on time-parametrized samples")
    system = trajectory.system
    n = trajectory.params.size
    if n < 2:
        return ActionEvaluations(0.0, 0.0, 0.0)
    kinetic = np.empty(n)
    margin = np.empty(n)
    for i in range(n):
        g = system.metric.matrix(trajectory.positions[i])
        v = trajectory.velocities[i]
        kinetic[i] = float(v @ g @ v)
        margin[i] = system.sigma_margin(trajectory.positions[i])
    t = trajectory.params
    momentum = cumulative_integral(t, kinetic)[-1]
    energy = cumulative_integral(t, 2.0 * margin)[-1]
    mixed = cumulative_integral(t, np.sqrt(2.0 * np.maximum(margin, 0.0) * kinetic))[-1]
    return ActionEvaluations(momentum, energy, mixed)


def jacobi_path_length(system: MechanicalSystem, params, positions, velocities) -> float:
    """Length of a sampled path in the Jacobi metric (any parametrization)."""
    params = np.asarray(params, dtype=float)
    n = params.size
    speeds = np.empty(n)
    for i in range(n):
        w = system.conformal_weight(positions[i])
        g = system.metric.matrix(positions[i])
        v = velocities[i]
        speeds[i] = math.sqrt(w * float(v @ g @ v))
    return float(cumulative_integral(params, speeds)[-1])


def first_variation_check(
    system: MechanicalSystem,
    trajectory: Trajectory,
    amplitude: float,
    direction=None,
) -> float:
    """Second-order stationarity probe of the Jacobi length.

    Perturbs the path by a sine bump of the given amplitude with fixed
    endpoints and returns |Delta S| / amplitude^2, which stays bounded as
    the amplitude shrinks when the path is a geodesic.
    """
    tau = trajectory.params
    q = trajectory.positions
    v = trajectory.velocities
    if direction is None:
        v0 = v[0]
        idx = int(np.argmin(np.abs(v0)))
        u = np.zeros(trajectory.k)
        u[idx] = 1.0
        n2 = float(v0 @ v0)
        if n2 > 0:
            u = u - (float(u @ v0) / n2) * v0
        norm = np.linalg.norm(u)
        if norm == 0:
            raise ValueError("could not construct a transverse direction")
        u = u / norm
    else:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
    span = tau[-1] - tau[0]
    bump = np.sin(np.pi * (tau - tau[0]) / span)
    dbump = (np.pi / span) * np.cos(np.pi * (tau - tau[0]) / span)

    base = jacobi_path_length(system, tau, q, v)
    q_pert = q + amplitude * bump[:, None] * u
    v_pert = v + amplitude * dbump[:, None] * u
    for qi in q_pert:
        if system.sigma_margin(qi) <= 0:
            raise DomainError("perturbed path exits the allowed region")
    perturbed = jacobi_path_length(system, tau, q_pert, v_pert)
    return abs(perturbed - base) / amplitude**2
