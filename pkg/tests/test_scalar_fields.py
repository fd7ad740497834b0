"""Potentials, metrics, systems and the allowed region."""

import math

import numpy as np
import pytest

from topospectra import (
    CartesianMassMetric,
    DimensionError,
    DomainError,
    FreePotential,
    GridSampledPotential,
    HarmonicPotential,
    KeplerPotential,
    MechanicalSystem,
    PolarKineticMetric,
    SigmaDomain,
    effective_radial_system,
    evaluate_potential,
    free_system,
    harmonic_system,
    kepler_system,
    potential_gradient,
    sigma_contains,
    turning_points,
)
from topospectra.scalar_fields import GeneralKineticMetric, potential_hessian


def central_difference(fn, q, step=1e-6):
    """Independent gradient oracle used against the analytic derivatives."""
    q = np.asarray(q, dtype=float)
    out = np.empty(q.size)
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = step
        out[i] = (fn(q + e) - fn(q - e)) / (2.0 * step)
    return out


class TestPotentialValues:
    def test_harmonic_minimum(self):
        V = HarmonicPotential((1.0, 1.0))
        assert evaluate_potential(V, (0.0, 0.0)) == 0.0

    def test_kepler_direct_substitution(self):
        V = KeplerPotential(1.0, dimension=2, chart="cartesian")
        assert evaluate_potential(V, (2.0, 0.0)) == pytest.approx(-0.5)
        V_radial = KeplerPotential(1.0, dimension=2, chart="radial")
        assert evaluate_potential(V_radial, (2.0, 1.2)) == pytest.approx(-0.5)

    def test_kepler_rejects_origin(self):
        V = KeplerPotential(1.0, dimension=2, chart="cartesian")
        with pytest.raises(DomainError):
            evaluate_potential(V, (0.0, 0.0))
        with pytest.raises(DomainError):
            evaluate_potential(KeplerPotential(1.0, 2, "radial"), (-0.5, 0.0))

    def test_dimension_mismatch(self):
        V = HarmonicPotential((1.0, 1.0))
        with pytest.raises(DimensionError):
            evaluate_potential(V, (1.0, 2.0, 3.0))

    def test_grid_sampled_quadratic(self):
        xs = np.linspace(-2.0, 2.0, 81)
        V = GridSampledPotential(xs, 0.5 * xs**2)
        # a cubic spline reproduces the quadratic to round-off
        assert evaluate_potential(V, (1.0,)) == pytest.approx(0.5, abs=1e-10)
        # off-node queries against the analytic value
        for x in xs[:-1] + 0.025:
            assert evaluate_potential(V, (x,)) == pytest.approx(0.5 * x**2, abs=1e-9)

    def test_grid_sampled_out_of_range(self):
        xs = np.linspace(-2.0, 2.0, 41)
        V = GridSampledPotential(xs, 0.5 * xs**2)
        with pytest.raises(DomainError):
            evaluate_potential(V, (2.5,))

    def test_grid_sampled_configurable_order(self):
        xs = np.linspace(-2.0, 2.0, 2001)
        V = GridSampledPotential(xs, 0.5 * xs**2, order=1)
        # linear interpolation error is O(h^2 V'') / 8 at panel midpoints
        h = xs[1] - xs[0]
        x = 1.0 + 0.5 * h
        assert evaluate_potential(V, (x,)) == pytest.approx(0.5 * x**2, abs=h**2)

    def test_central_profile_fd_fallback_derivatives(self):
        from topospectra.scalar_fields import CentralPotential

        V = CentralPotential(profile=lambda r: -1.0 / r, dimension=2, chart="radial")
        assert V.radial_derivative(2.0) == pytest.approx(0.25, rel=1e-8)
        assert V.radial_second_derivative(2.0) == pytest.approx(-0.25, rel=1e-5)


class TestGradients:
    def test_free_gradient_zero(self):
        V = FreePotential(3)
        assert np.all(potential_gradient(V, (0.4, -1.0, 2.0)) == 0.0)

    def test_harmonic_gradient(self):
        V = HarmonicPotential((1.0, 2.0))
        np.testing.assert_allclose(potential_gradient(V, (0.5, 0.0)), [0.5, 0.0])
        np.testing.assert_allclose(potential_gradient(V, (0.3, -0.2)), [0.3, -0.4])

    def test_kepler_radial_derivative(self):
        V = KeplerPotential(1.0, dimension=1, chart="radial")
        np.testing.assert_allclose(potential_gradient(V, (2.0,)), [0.25])

    def test_kepler_near_singularity_guarded(self):
        V = KeplerPotential(1.0, dimension=2, chart="cartesian")
        with pytest.raises(DomainError):
            potential_gradient(V, (1e-8, 0.0))

    @pytest.mark.parametrize(
        "potential, box",
        [
            (HarmonicPotential((1.0, 0.7)), (-2.0, 2.0)),
            (KeplerPotential(1.3, dimension=2, chart="cartesian"), (0.4, 2.0)),
            (FreePotential(2), (-2.0, 2.0)),
        ],
    )
    def test_analytic_gradient_matches_central_differences(self, potential, box):
        rng = np.random.default_rng(11)
        for _ in range(100):
            q = rng.uniform(box[0], box[1], size=2)
            if potential.family == "kepler":
                q = np.abs(q) + 0.3
            grad = potential_gradient(potential, q)
            fd = central_difference(lambda p: evaluate_potential(potential, p), q)
            scale = max(1.0, float(np.abs(grad).max()))
            assert np.abs(grad - fd).max() / scale < 1e-6

    def test_hessian_matches_central_differences(self):
        potential = HarmonicPotential((1.0, 0.7))
        H = potential_hessian(potential, (0.3, 0.4))
        np.testing.assert_allclose(H, np.diag([1.0, 0.7]), atol=1e-12)
        kepler = KeplerPotential(1.0, dimension=2, chart="cartesian")
        q = np.array([0.8, -0.5])
        H = potential_hessian(kepler, q)
        fd = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = 1e-5
            fd[:, j] = (
                potential_gradient(kepler, q + e) - potential_gradient(kepler, q - e)
            ) / 2e-5
        assert np.abs(H - fd).max() < 1e-6


class TestMetrics:
    def test_cartesian_matrix(self):
        g = CartesianMassMetric(mass=2.0, dimension=3)
        np.testing.assert_allclose(g.matrix((0.0, 0.0, 0.0)), 2.0 * np.eye(3))
        assert np.all(g.christoffels((1.0, 2.0, 3.0)) == 0.0)

    def test_polar_matrix_and_symbols(self):
        g = PolarKineticMetric(mass=1.5)
        np.testing.assert_allclose(g.matrix((2.0, 0.3)), np.diag([1.5, 6.0]))
        gamma = g.christoffels((2.0, 0.3))
        assert gamma[0, 1, 1] == pytest.approx(-2.0)
        assert gamma[1, 0, 1] == pytest.approx(0.5)

    def test_polar_rejects_nonpositive_radius(self):
        g = PolarKineticMetric()
        with pytest.raises(DomainError):
            g.matrix((0.0, 1.0))

    def test_general_metric_fd_symbols_match_polar(self):
        polar = PolarKineticMetric(mass=1.3)
        general = GeneralKineticMetric(
            fn=lambda q: np.diag([1.3, 1.3 * q[0] ** 2]), dimension=2
        )
        q = np.array([1.7, 0.4])
        assert np.abs(polar.christoffels(q) - general.christoffels(q)).max() < 1e-9

    @pytest.mark.parametrize(
        "metric, points",
        [
            (CartesianMassMetric(0.7, 2), [(0.0, 0.0), (1.0, -1.0)]),
            (PolarKineticMetric(1.2), [(0.5, 0.0), (2.0, 3.0)]),
        ],
    )
    def test_positive_definite(self, metric, points):
        for q in points:
            eigenvalues = np.linalg.eigvalsh(metric.matrix(q))
            assert np.all(eigenvalues > 0.0)


class TestSystems:
    def test_probe_point_validation(self):
        with pytest.raises(DomainError):
            MechanicalSystem(
                CartesianMassMetric(1.0, 1),
                HarmonicPotential((1.0,)),
                energy=1.0,
                probe_point=(3.0,),
            )

    def test_energy_must_be_finite(self):
        with pytest.raises(ValueError):
            MechanicalSystem(
                CartesianMassMetric(1.0, 1), HarmonicPotential((1.0,)), energy=math.nan
            )

    def test_params_collected(self):
        system = kepler_system(alpha=1.5, mass=2.0, angular_momentum=0.7)
        assert system.params["alpha"] == 1.5
        assert system.params["m"] == 2.0
        assert system.params["l"] == 0.7
        harmonic = harmonic_system((1.0, 0.5))
        assert harmonic.params["k1"] == 1.0 and harmonic.params["k2"] == 0.5


class TestSigma:
    def test_harmonic_membership(self):
        system = harmonic_system((1.0,), energy=1.0)
        assert sigma_contains(system, (1.0,))       # V = 0.5 < 1
        assert not sigma_contains(system, (2.0,))   # V = 2 > 1

    def test_kepler_membership(self):
        system = kepler_system(alpha=1.0, energy=-0.5)
        assert not sigma_contains(system, (3.0, 0.0))  # V = -1/3 > -0.5
        assert sigma_contains(system, (1.0, 0.0))

    def test_domain_node_guard(self):
        system = harmonic_system((1.0,), energy=1.0)
        domain = SigmaDomain(system, epsilon=0.5)
        domain.require_node((0.0,))
        with pytest.raises(DomainError):
            domain.require_node((1.2,))  # margin 0.28 < 0.5


class TestTurningPoints:
    def test_harmonic_turning_point(self):
        system = harmonic_system((1.0,), energy=1.0)
        result = turning_points(system, (0.0,), (1.0,), search_bound=5.0)
        assert not result.unbounded
        assert result.parameters[0] == pytest.approx(math.sqrt(2.0), abs=1e-9)

    def test_free_particle_unbounded(self):
        system = free_system(1, energy=1.0)
        result = turning_points(system, (0.0,), (1.0,), search_bound=50.0)
        assert result.unbounded

    def test_kepler_effective_radial_crossings(self):
        # E - V_eff = 0 with m = 1, alpha = 1, l = 0.6, E = -0.5 reduces to
        # r^2 - 2 r + 0.36 = 0, i.e. r = 0.2 and r = 1.8 exactly.
        system = effective_radial_system(alpha=1.0, angular_momentum=0.6, energy=-0.5)
        outward = turning_points(system, (1.0,), (1.0,), search_bound=5.0)
        inward = turning_points(system, (1.0,), (-1.0,), search_bound=0.99)
        assert outward.parameters[0] == pytest.approx(0.8, abs=1e-9)
        assert inward.parameters[0] == pytest.approx(0.8, abs=1e-9)

    def test_origin_outside_rejected(self):
        system = harmonic_system((1.0,), energy=1.0)
        with pytest.raises(DomainError):
            turning_points(system, (2.0,), (1.0,))

    def test_membership_consistent_with_first_crossing(self):
        system = harmonic_system((1.0, 0.0), energy=1.0)
        origin = np.array([0.1, 0.2])
        direction = np.array([1.0, 0.0])
        result = turning_points(system, origin, direction, search_bound=5.0)
        first = result.parameters[0]
        for t in np.linspace(0.05, 0.95, 10) * first:
            assert sigma_contains(system, origin + t * direction)
