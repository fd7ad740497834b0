"""Built-in verification suite: closed-form identities at desk scale.

Each check pits an independent route (quadrature, bisection, finite
differences, cross-integration) against the closed forms implemented by the
library, at fixed tolerances.  The CLI ``check`` command prints one
pass/fail line per item; the acceptance test module asserts them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .characteristic_classes import (
    RegularizedDomain,
    euler_density,
    euler_integral_ho_reduced,
    ho_reduced_quadrature,
    integrate_euler,
)
from .dynamics import (
    GeodesicState,
    NewtonianState,
    integrate_geodesic,
    integrate_newton,
    maupertuis_action,
    reparametrize,
)
from .jacobi_geometry import (
    FrameRotation,
    cartan_connection_from_field,
    check_cocycle,
    coframe_field_for,
    connection_one_form,
    curvature_two_form,
    first_structure_residual,
    jacobi_metric,
    random_rotation,
    rotated_field,
    second_structure_residual,
    transform_frame,
)
from .scalar_fields import free_system, harmonic_system, kepler_system
from .spectra import ho_canonical_map, ho_topological_spectrum, kepler_apsidal, kepler_spectrum

__all__ = ["CheckResult", "run_all", "CRITERIA"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name: str, passed: bool, detail: str, start: float) -> CheckResult:
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# 1. Reduced oscillator integral: quadrature vs closed form
# ---------------------------------------------------------------------------

def check_reduced_ho_integral() -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(20260808)
    worst = 0.0
    for _ in range(20):
        k = rng.uniform(0.3, 3.0)
        E = rng.uniform(0.3, 3.0)
        q0 = rng.uniform(0.05, 0.9) * math.sqrt(2.0 * E / k)
        closed = euler_integral_ho_reduced(k, E, q0)
        quad = ho_reduced_quadrature(k, E, q0).value
        worst = max(worst, abs(quad - closed) / abs(closed))
    return _result(
        "reduced_ho_euler_integral",
        worst < 1e-8,
        f"max relative error {worst:.3e} over 20 draws (tol 1e-8)",
        start,
    )


# ---------------------------------------------------------------------------
# 2. Canonical-spectrum recovery for the oscillator
# ---------------------------------------------------------------------------

def check_canonical_spectrum() -> CheckResult:
    start = time.perf_counter()
    worst = 0.0
    energies_exact = True
    for n in range(1, 11):
        params = ho_canonical_map(n, m=1.0, k_spring=1.0, hbar=1.0)
        if params.E != n + 0.5:
            energies_exact = False
        level = ho_topological_spectrum(params.k_spring, params.E, params.q0)
        worst = max(worst, abs(level - n))
    return _result(
        "canonical_spectrum_recovery",
        worst < 1e-10 and energies_exact,
        f"max |level - n| = {worst:.3e} for n = 1..10; E = n + 1/2 exact: {energies_exact}",
        start,
    )


# ---------------------------------------------------------------------------
# 3. Apsidal radii: closed form vs bisection on the energy equation
# ---------------------------------------------------------------------------

def _bisect(fn, lo: float, hi: float, iterations: int = 200) -> float:
    flo = fn(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def check_kepler_apsidal() -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(31415926)
    worst = 0.0
    for _ in range(50):
        m = rng.uniform(0.5, 2.0)
        alpha = rng.uniform(0.5, 2.0)
        abs_E = rng.uniform(0.1, 1.0)
        x = rng.uniform(0.05, 0.95)
        l = math.sqrt(x * m * alpha**2 / (2.0 * abs_E))
        E = -abs_E
        r_minus, r_plus = kepler_apsidal(m, alpha, l, E)

        def radial_energy(r: float) -> float:
            return E - l**2 / (2.0 * m * r**2) + alpha / r

        r_peak = l**2 / (m * alpha)
        root_minus = _bisect(radial_energy, 1e-12, r_peak)
        root_plus = _bisect(lambda r: -radial_energy(r), r_peak, 10.0 * alpha / abs_E)
        worst = max(worst, abs(root_minus - r_minus), abs(root_plus - r_plus))
    exact = kepler_apsidal(1.0, 1.0, 0.6, -0.5)
    exact_err = max(abs(exact[0] - 0.2), abs(exact[1] - 1.8))
    passed = worst < 1e-9 and exact_err < 1e-12
    return _result(
        "kepler_apsidal_radii",
        passed,
        f"max |bisection - formula| = {worst:.3e} over 50 draws (tol 1e-9); "
        f"case (1, 1, 0.6, -0.5) error {exact_err:.3e} (tol 1e-12)",
        start,
    )


# ---------------------------------------------------------------------------
# 4. Annulus quadrature of the density vs the boundary term
# ---------------------------------------------------------------------------

def check_kepler_annulus() -> CheckResult:
    start = time.perf_counter()
    system = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=0.6, coords="polar")
    values = kepler_spectrum(1.0, 1.0, 0.6, -0.5)
    r_minus, r_plus = kepler_apsidal(1.0, 1.0, 0.6, -0.5)
    domain = RegularizedDomain.radial(r_minus, r_plus, epsilon=0.0)
    delta = 1e-3 * (r_plus - r_minus)
    report = integrate_euler(system, domain, margins=[delta, delta / 2.0, delta / 4.0])
    target = values.boundary_term_value
    rel = abs(report.extrapolated - target) / abs(target)
    return _result(
        "kepler_annulus_vs_boundary_term",
        rel < 1e-5 and bool(report.converged),
        f"extrapolated {report.extrapolated:.10g} vs boundary term {target:.10g} "
        f"(rel err {rel:.3e}, tol 1e-5); reciprocal form -x/sqrt(1-x) = "
        f"{values.reciprocal_level_value:.10g}",
        start,
    )


# ---------------------------------------------------------------------------
# 5. Dynamical equivalence of the two integration routes
# ---------------------------------------------------------------------------

def _to_image(system, positions: np.ndarray) -> np.ndarray:
    if system.metric.form == "diagonal_polar":
        r = positions[:, 0]
        th = positions[:, 1]
        return np.column_stack([r * np.cos(th), r * np.sin(th)])
    return positions


def _equivalence_distance(system, state: NewtonianState, t_end: float) -> float:
    newton = integrate_newton(system, state, t_end, tol=1e-10, samples=1200)
    on_arc = reparametrize(newton, "t_to_stilde")
    s_values = on_arc.params
    geodesic = integrate_geodesic(
        system,
        GeodesicState(q=state.q, qprime=state.qdot),
        s_end=float(s_values[-1]),
        tol=1e-10,
        eval_params=s_values,
    )
    margins = np.array([system.sigma_margin(q) for q in newton.positions])
    mask = margins > 0.05 * abs(system.energy)
    img_n = _to_image(system, newton.positions[mask])
    img_g = _to_image(system, geodesic.positions[mask])
    return float(np.max(np.linalg.norm(img_n - img_g, axis=1)))


def check_dynamical_equivalence() -> CheckResult:
    start = time.perf_counter()
    details = []
    worst = 0.0

    ho = harmonic_system((1.0, 0.0), mass=1.0, energy=0.5)
    d = _equivalence_distance(ho, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 1.1)
    details.append(f"oscillator {d:.3e}")
    worst = max(worst, d)

    circular = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=1.0)
    d = _equivalence_distance(
        circular, NewtonianState(q=(1.0, 0.0), qdot=(0.0, 1.0)), 2.0 * math.pi
    )
    details.append(f"circular orbit {d:.3e}")
    worst = max(worst, d)

    eccentric = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=0.6)
    d = _equivalence_distance(
        eccentric, NewtonianState(q=(0.2, 0.0), qdot=(0.0, 15.0)), 2.0 * math.pi
    )
    details.append(f"eccentric orbit (x = 0.36) {d:.3e}")
    worst = max(worst, d)

    return _result(
        "dynamical_equivalence",
        worst < 1e-6,
        "max pointwise distance: " + ", ".join(details) + " (tol 1e-6)",
        start,
    )


# ---------------------------------------------------------------------------
# 6. Structure-equation residuals of the closed-form connection/curvature
# ---------------------------------------------------------------------------

def _sample_interior(rng, system, box, margin_fraction=0.05, count=100):
    points = []
    floor = margin_fraction * abs(system.energy)
    while len(points) < count:
        q = np.array([rng.uniform(lo, hi) for lo, hi in box])
        try:
            if system.sigma_margin(q) >= floor:
                points.append(q)
        except Exception:
            continue
    return points


def check_structure_equations() -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(27182818)
    cases = [
        ("anisotropic oscillator", harmonic_system((1.0, 0.7), energy=1.0),
         ((-1.2, 1.2), (-1.2, 1.2))),
        ("reduced oscillator", harmonic_system((1.0, 0.0), energy=1.0),
         ((-1.25, 1.25), (-1.0, 1.0))),
        ("kepler (cartesian)", kepler_system(coords="cartesian"),
         ((0.45, 1.7), (-0.8, 0.8))),
    ]
    worst = 0.0
    details = []
    for label, system, box in cases:
        r1 = r2 = 0.0
        for q in _sample_interior(rng, system, box, 0.15, 100):
            r1 = max(r1, first_structure_residual(system, q))
            r2 = max(r2, second_structure_residual(system, q))
        details.append(f"{label}: first {r1:.2e}, second {r2:.2e}")
        worst = max(worst, r1, r2)
    return _result(
        "structure_equation_residuals",
        worst < 1e-6,
        "; ".join(details) + " (tol 1e-6, 100 points each)",
        start,
    )


# ---------------------------------------------------------------------------
# 7. Frame transformation law and cocycle condition
# ---------------------------------------------------------------------------

def check_transformation_and_cocycle() -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(16180339)
    worst = 0.0
    systems = {
        2: (harmonic_system((1.0, 0.7), energy=1.0), np.array([0.4, -0.3])),
        3: (harmonic_system((1.0, 0.7, 0.4), energy=1.0), np.array([0.3, -0.2, 0.5])),
    }
    for k, (system, q) in systems.items():
        point = jacobi_metric(system, q)
        omega = connection_one_form(point)
        curvature = curvature_two_form(point)
        base_field = coframe_field_for(system)
        for _ in range(20):
            rot = random_rotation(k, rng)
            inverse = FrameRotation(rot.matrix.T)
            # group round trip
            back = transform_frame(transform_frame(curvature, rot), inverse)
            worst = max(worst, float(np.abs(back.coeffs - curvature.coeffs).max()))
            # composition law
            rot2 = random_rotation(k, rng)
            seq = transform_frame(transform_frame(curvature, rot), rot2)
            joint = transform_frame(curvature, FrameRotation(rot2.matrix @ rot.matrix))
            worst = max(worst, float(np.abs(seq.coeffs - joint.coeffs).max()))
            # independent structure-equation solve in the rotated gauge
            conn_rotated = cartan_connection_from_field(rotated_field(base_field, rot), q)
            conn_conjugated = transform_frame(omega, rot)
            worst = max(
                worst,
                float(
                    np.abs(
                        conn_rotated.coordinate_components()
                        - conn_conjugated.coordinate_components()
                    ).max()
                ),
            )
            if k == 2:
                rotated = transform_frame(curvature, rot)
                worst = max(
                    worst, abs(rotated.coeffs[0, 1, 0, 1] - curvature.coeffs[0, 1, 0, 1])
                )
    # cocycle over four charts
    charts = [random_rotation(3, rng) for _ in range(4)]
    transitions = {}
    for i in range(4):
        for j in range(4):
            if i != j:
                transitions[(i, j)] = charts[i].matrix @ charts[j].matrix.T
    report = check_cocycle(transitions, tolerance=1e-10)
    worst = max(worst, report.max_defect)
    return _result(
        "transformation_law_and_cocycle",
        worst < 1e-10,
        f"max defect {worst:.3e} over SO(2)/SO(3) draws and 4-chart cocycle (tol 1e-10)",
        start,
    )


# ---------------------------------------------------------------------------
# 8. Energy conservation and the three action evaluations
# ---------------------------------------------------------------------------

def check_action_identities() -> CheckResult:
    start = time.perf_counter()
    system = harmonic_system((1.0, 1.0), mass=1.0, energy=0.5)
    amp = math.sqrt(0.5)  # circular orbit with E = k A^2 = 0.5
    state = NewtonianState(q=(amp, 0.0), qdot=(0.0, amp))
    traj = integrate_newton(system, state, 2.0 * math.pi, tol=1e-10, samples=4000)
    drift = traj.metadata["energy_drift"]
    action = maupertuis_action(traj)
    spread = action.max_relative_spread
    ellipse = 2.0 * math.pi * system.energy  # omega = 1
    ellipse_err = abs(action.momentum_route - ellipse) / ellipse
    passed = drift < 1e-8 and spread < 1e-6 and ellipse_err < 1e-6
    return _result(
        "conservation_and_action_identities",
        passed,
        f"energy drift {drift:.3e} (tol 1e-8); action spread {spread:.3e}, "
        f"vs 2 pi E / omega rel err {ellipse_err:.3e} (tol 1e-6)",
        start,
    )


# ---------------------------------------------------------------------------
# 9. Free-particle flatness
# ---------------------------------------------------------------------------

def check_free_flatness() -> CheckResult:
    start = time.perf_counter()
    system = free_system(2, mass=1.0, energy=0.5)
    worst = 0.0
    for x in (-1.0, 0.0, 1.0):
        for y in (-1.0, 0.0, 1.0):
            q = np.array([x, y])
            curvature = curvature_two_form(jacobi_metric(system, q))
            worst = max(worst, float(np.abs(curvature.coeffs).max()))
            worst = max(worst, abs(euler_density(system, q)))
    return _result(
        "free_particle_flatness",
        worst < 1e-12,
        f"max |curvature|, |density| = {worst:.3e} on a 3x3 grid (tol 1e-12)",
        start,
    )


CRITERIA = (
    check_reduced_ho_integral,
    check_canonical_spectrum,
    check_kepler_apsidal,
    check_kepler_annulus,
    check_dynamical_equivalence,
    check_structure_equations,
    check_transformation_and_cocycle,
    check_action_identities,
    check_free_flatness,
)


def run_all(quiet: bool = False) -> list[CheckResult]:
    results = []
    for criterion in CRITERIA:
        result = criterion()
        results.append(result)
        if not quiet:
            status = "PASS" if result.passed else "FAIL"
            print(f"{status}  {result.name}: {result.detail} [{result.seconds:.2f}s]")
    return results
