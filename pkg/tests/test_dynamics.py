"""Newtonian and geodesic integration, parameter maps, reduced action."""

import math

import numpy as np
import pytest

from topospectra import (
    DomainError,
    GeodesicState,
    NewtonianState,
    Trajectory,
    first_variation_check,
    free_system,
    harmonic_system,
    integrate_geodesic,
    integrate_newton,
    kepler_system,
    launch_state,
    maupertuis_action,
    reparametrize,
)
from topospectra.scalar_fields import CentralPotential, CartesianMassMetric, MechanicalSystem


def polar_to_cartesian(positions):
    r, th = positions[:, 0], positions[:, 1]
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


class TestNewton:
    def test_free_particle_straight_line(self):
        system = free_system(2, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(0.6, 0.8)), 3.0)
        expected = np.outer(traj.params, [0.6, 0.8])
        assert np.abs(traj.positions - expected).max() < 1e-10

    def test_harmonic_cosine_solution(self):
        # m = k = 1 from the turning point: q(t) = cos t, checked at t = pi
        system = harmonic_system((1.0,), energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(1.0,), qdot=(0.0,)), math.pi, tol=1e-10, eps_stop=0.0
        )
        assert abs(traj.positions[-1, 0] - math.cos(math.pi)) < 1e-8

    def test_energy_drift_bound(self):
        system = harmonic_system((1.0,), energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(0.0,), qdot=(1.0,)), 2.0 * math.pi, tol=1e-10, eps_stop=0.0
        )
        assert traj.metadata["energy_drift"] < 1e-8

    def test_boundary_halt_with_resolvable_threshold(self):
        system = harmonic_system((1.0,), energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(0.0,), qdot=(1.0,)), 10.0, eps_stop=0.05
        )
        assert traj.metadata["boundary_hit"]
        assert traj.params[-1] < 10.0
        assert system.sigma_margin(traj.positions[-1]) == pytest.approx(0.05, abs=1e-7)

    def test_kepler_circular_orbit_radius_constant(self):
        system = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=1.0)
        traj = integrate_newton(
            system, NewtonianState(q=(1.0, 0.0), qdot=(0.0, 1.0)), 2.0 * math.pi, tol=1e-10
        )
        assert np.abs(traj.positions[:, 0] - 1.0).max() < 1e-8

    def test_initial_point_outside_rejected(self):
        system = harmonic_system((1.0,), energy=0.5)
        with pytest.raises(DomainError):
            integrate_newton(system, NewtonianState(q=(2.0,), qdot=(0.0,)), 1.0)

    def test_launch_state_matches_energy(self):
        system = kepler_system(alpha=1.0, energy=-0.5, coords="cartesian")
        state = launch_state(system, (1.0, 0.0), (0.0, 1.0))
        g = system.metric.matrix(state.q)
        H = 0.5 * state.qdot @ g @ state.qdot + system.potential_value(state.q)
        assert H == pytest.approx(system.energy, rel=1e-12)


class TestGeodesic:
    def test_free_particle_affine_straight_line(self):
        system = free_system(2, mass=1.0, energy=0.5)
        # h = 2 E m delta = identity, so stilde equals euclidean arc length
        traj = integrate_geodesic(
            system, GeodesicState(q=(0.0, 0.0), qprime=(3.0, 4.0)), 2.0
        )
        expected = np.outer(traj.params, [0.6, 0.8])
        assert np.abs(traj.positions - expected).max() < 1e-9

    def test_unit_speed_drift(self):
        # the arc length to the turning point is pi/4; stay inside it
        system = harmonic_system((1.0, 0.0), energy=0.5)
        traj = integrate_geodesic(
            system, GeodesicState(q=(0.0, 0.0), qprime=(1.0, 0.0)), 0.7, tol=1e-10
        )
        assert traj.metadata["unit_speed_drift"] < 1e-7

    def test_harmonic_matches_newton_after_reparametrization(self):
        system = harmonic_system((1.0, 0.0), energy=0.5)
        newton = integrate_newton(
            system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 1.0, tol=1e-11
        )
        on_arc = reparametrize(newton, "t_to_stilde")
        geod = integrate_geodesic(
            system,
            GeodesicState(q=(0.0, 0.0), qprime=(1.0, 0.0)),
            s_end=float(on_arc.params[-1]),
            tol=1e-11,
            eval_params=on_arc.params,
        )
        mask = np.array([system.sigma_margin(q) for q in newton.positions]) > 0.05 * 0.5
        assert np.abs(geod.positions[mask] - newton.positions[mask]).max() < 1e-6

    def test_kepler_circular_image(self):
        system = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=1.0)
        newton = integrate_newton(
            system, NewtonianState(q=(1.0, 0.0), qdot=(0.0, 1.0)), 2.0 * math.pi, tol=1e-10
        )
        on_arc = reparametrize(newton, "t_to_stilde")
        geod = integrate_geodesic(
            system,
            GeodesicState(q=(1.0, 0.0), qprime=(0.0, 1.0)),
            s_end=float(on_arc.params[-1]),
            tol=1e-10,
            eval_params=on_arc.params,
        )
        assert np.abs(geod.positions[:, 0] - 1.0).max() < 1e-6
        distance = np.linalg.norm(
            polar_to_cartesian(geod.positions) - polar_to_cartesian(newton.positions),
            axis=1,
        )
        assert distance.max() < 1e-6

    def test_boundary_degeneracy_halts(self):
        # launched straight at the turning point, the affine parametrization
        # degenerates and the run must stop with a boundary event
        system = harmonic_system((1.0, 0.0), energy=0.5)
        traj = integrate_geodesic(
            system, GeodesicState(q=(0.0, 0.0), qprime=(1.0, 0.0)), 5.0, tol=1e-8
        )
        assert traj.metadata["boundary_hit"]
        assert system.sigma_margin(traj.positions[-1]) < 1e-4


class TestReparametrize:
    def test_free_particle_identity_map(self):
        # E = 1/2, V = 0: ds/dt = 2 (E - V) = 1, so stilde = t
        system = free_system(2, mass=1.0, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 2.0)
        on_arc = reparametrize(traj, "t_to_stilde")
        assert np.abs(on_arc.params - traj.params).max() < 1e-12

    def test_constant_potential_scaling(self):
        # V = E/2 everywhere: delta stilde = E * delta t
        E = 0.8
        potential = CentralPotential(
            profile=lambda r: E / 2.0,
            dprofile=lambda r: 0.0,
            d2profile=lambda r: 0.0,
            dimension=2,
            chart="cartesian",
        )
        system = MechanicalSystem(
            CartesianMassMetric(1.0, 2), potential, energy=E, probe_point=(1.0, 0.0)
        )
        traj = integrate_newton(
            system, launch_state(system, (1.0, 0.0), (1.0, 0.0)), 1.5
        )
        on_arc = reparametrize(traj, "t_to_stilde")
        assert np.abs(on_arc.params - E * traj.params).max() < 1e-10

    def test_round_trip_recovers_time(self):
        system = harmonic_system((1.0,), energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(0.0,), qdot=(1.0,)), 1.2, tol=1e-11, samples=3000
        )
        back = reparametrize(reparametrize(traj, "t_to_stilde"), "stilde_to_t")
        assert np.abs(back.params - traj.params).max() < 1e-8
        assert np.abs(back.velocities - traj.velocities).max() < 1e-8

    def test_boundary_sample_rejected(self):
        system = harmonic_system((1.0,), energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(1.0,), qdot=(0.0,)), 1.0, eps_stop=0.0
        )
        with pytest.raises(DomainError):
            reparametrize(traj, "t_to_stilde")

    def test_direction_validation(self):
        system = free_system(2, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 1.0)
        with pytest.raises(ValueError):
            reparametrize(traj, "stilde_to_t")
        with pytest.raises(ValueError):
            reparametrize(traj, "sideways")


class TestAction:
    def test_free_particle_unit_action(self):
        # m = 1, E = 1/2 over t in [0, 1]: 2T = 1, all routes give 1.0
        system = free_system(2, mass=1.0, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 1.0)
        action = maupertuis_action(traj)
        for value in action.values:
            assert value == pytest.approx(1.0, rel=1e-10)

    def test_zero_length_trajectory(self):
        system = free_system(2, energy=0.5)
        traj = Trajectory(
            system=system,
            kind="newton",
            parameterization="t",
            params=np.array([0.0]),
            positions=np.zeros((1, 2)),
            velocities=np.ones((1, 2)),
            energies=np.array([0.5]),
        )
        assert maupertuis_action(traj).values == (0.0, 0.0, 0.0)

    def test_harmonic_period_matches_ellipse_area(self):
        # one full period of the 1-D oscillator: action = 2 pi E / omega
        system = harmonic_system((1.0,), mass=1.0, energy=0.5)
        traj = integrate_newton(
            system,
            NewtonianState(q=(0.0,), qdot=(1.0,)),
            2.0 * math.pi,
            tol=1e-11,
            samples=4000,
            eps_stop=0.0,
        )
        action = maupertuis_action(traj)
        assert action.max_relative_spread < 1e-6
        ellipse = 2.0 * math.pi * system.energy
        assert action.momentum_route == pytest.approx(ellipse, rel=1e-6)


class TestFirstVariation:
    def test_free_particle_straight_line_is_minimum(self):
        system = free_system(2, mass=1.0, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 2.0)
        ratio = first_variation_check(system, traj, 1e-3)
        assert 0.0 < ratio < 10.0

    def test_second_order_scaling(self):
        system = free_system(2, mass=1.0, energy=0.5)
        traj = integrate_newton(system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 2.0)
        r1 = first_variation_check(system, traj, 2e-3)
        r2 = first_variation_check(system, traj, 1e-3)
        # |Delta S| ~ a^2, so the ratio is amplitude independent
        assert r2 == pytest.approx(r1, rel=0.05)

    def test_harmonic_geodesic_segment_stationary(self):
        system = harmonic_system((1.0, 0.0), energy=0.5)
        traj = integrate_geodesic(
            system, GeodesicState(q=(0.0, 0.0), qprime=(1.0, 0.0)), 0.7, tol=1e-11
        )
        r1 = first_variation_check(system, traj, 1e-3)
        r2 = first_variation_check(system, traj, 5e-4)
        assert r2 == pytest.approx(r1, rel=0.2)

    def test_perturbation_exiting_sigma_rejected(self):
        system = harmonic_system((1.0, 0.9), energy=0.5)
        traj = integrate_newton(
            system, launch_state(system, (0.0, 0.0), (1.0, 0.0)), 1.2, tol=1e-9
        )
        with pytest.raises(DomainError):
            first_variation_check(system, traj, 2.0)


class TestTrajectoryContainer:
    def test_monotone_parameter_enforced(self):
        system = free_system(1, energy=0.5)
        with pytest.raises(ValueError):
            Trajectory(
                system=system,
                kind="newton",
                parameterization="t",
                params=np.array([0.0, 1.0, 1.0]),
                positions=np.zeros((3, 1)),
                velocities=np.zeros((3, 1)),
                energies=np.zeros(3),
            )

    def test_csv_export_schema(self):
        system = free_system(2, energy=0.5)
        traj = integrate_newton(
            system, NewtonianState(q=(0.0, 0.0), qdot=(1.0, 0.0)), 1.0, samples=5
        )
        text = traj.to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == "param,q1,q2,v1,v2,energy"
        assert len(lines) == 6
        row = lines[1].split(",")
        assert len(row) == 6
        assert float(row[5]) == pytest.approx(0.5)
