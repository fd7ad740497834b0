"""Discretization relations and their solvers."""

import math

import numpy as np
import pytest

from topospectra import (
    DomainError,
    RegularizedDomain,
    SolveError,
    SpectrumRelation,
    harmonic_relation,
    ho_canonical_map,
    ho_topological_spectrum,
    integrate_euler,
    kepler_apsidal,
    kepler_boundary_relation,
    kepler_reciprocal_relation,
    kepler_spectrum,
    kepler_system,
    solve_level,
    spectrum_table,
)
from topospectra.spectra import KeplerSpectrumParams, spectrum_table_csv


class TestHarmonicSpectrum:
    def test_zero_at_origin(self):
        assert ho_topological_spectrum(1.0, 1.0, 0.0) == 0.0

    def test_reference_values(self):
        assert ho_topological_spectrum(1.0, 1.0, 0.5) == pytest.approx(
            -0.2857142857142857, rel=1e-12
        )
        assert ho_topological_spectrum(1.0, 2.5, -2.0) == pytest.approx(2.0, rel=1e-12)

    def test_infinite_interval_limit(self):
        assert ho_topological_spectrum(1.0, 1.0, -math.inf) == 0.0

    def test_turning_point_rejected(self):
        with pytest.raises(DomainError):
            ho_topological_spectrum(1.0, 0.5, 1.0)

    def test_canonical_map_level_two(self):
        params = ho_canonical_map(2, m=1.0, k_spring=1.0, hbar=1.0)
        assert params.E == 2.5
        assert params.C == 4.0
        # q0 = 1/4 - sqrt(1/16 + 5) = -2 exactly
        assert params.q0 == pytest.approx(-2.0, abs=1e-14)
        assert ho_topological_spectrum(1.0, params.E, params.q0) == pytest.approx(2.0)

    def test_canonical_map_level_one(self):
        params = ho_canonical_map(1)
        assert params.E == 1.5
        assert params.q0 == pytest.approx(0.5 - math.sqrt(3.25), rel=1e-15)
        assert ho_topological_spectrum(1.0, params.E, params.q0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_round_trip_levels_one_to_ten(self):
        for n in range(1, 11):
            params = ho_canonical_map(n)
            level = ho_topological_spectrum(params.k_spring, params.E, params.q0)
            assert abs(level - n) < 1e-10
            # the identity k q0^2 - 2 E = 2 k q0 / C behind the exactness
            assert params.k_spring * params.q0**2 - 2.0 * params.E == pytest.approx(
                2.0 * params.k_spring * params.q0 / params.C, rel=1e-12
            )

    def test_level_zero_reported_as_limit(self):
        params = ho_canonical_map(0)
        assert params.q0 == -math.inf
        assert params.E == 0.5
        assert ho_topological_spectrum(1.0, params.E, params.q0) == 0.0

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            ho_canonical_map(-1)


class TestKeplerApsidal:
    def test_reference_case(self):
        r_minus, r_plus = kepler_apsidal(1.0, 1.0, 0.6, -0.5)
        assert abs(r_minus - 0.2) < 1e-12
        assert abs(r_plus - 1.8) < 1e-12

    def test_circular_orbit(self):
        # x = 1 exactly for l^2 = m alpha^2 / (2 |E|)
        r_minus, r_plus = kepler_apsidal(1.0, 1.0, 1.0, -0.5)
        assert r_minus == pytest.approx(1.0) and r_plus == pytest.approx(1.0)

    def test_small_angular_momentum_limit(self):
        r_minus, r_plus = kepler_apsidal(1.0, 1.0, 1e-4, -0.5)
        assert r_minus < 1e-7
        assert r_plus == pytest.approx(2.0, rel=1e-7)

    def test_positive_energy_rejected(self):
        with pytest.raises(DomainError):
            kepler_apsidal(1.0, 1.0, 0.6, 0.5)

    def test_unbound_angular_momentum_rejected(self):
        with pytest.raises(DomainError):
            kepler_apsidal(1.0, 1.0, 2.0, -0.5)  # x = 4 > 1

    def test_energy_equation_satisfied(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            m = rng.uniform(0.5, 2.0)
            alpha = rng.uniform(0.5, 2.0)
            abs_E = rng.uniform(0.1, 1.5)
            x = rng.uniform(0.05, 0.999)
            l = math.sqrt(x * m * alpha**2 / (2.0 * abs_E))
            for r in kepler_apsidal(m, alpha, l, -abs_E):
                residual = -abs_E - (l**2 / (2.0 * m * r**2) - alpha / r)
                assert abs(residual) < 1e-10 * abs_E


class TestKeplerSpectrum:
    def test_reference_values(self):
        values = kepler_spectrum(1.0, 1.0, 0.6, -0.5)
        assert values.x == pytest.approx(0.36, rel=1e-14)
        assert values.reciprocal_level_value == pytest.approx(-0.45, rel=1e-12)
        assert values.boundary_term_value == pytest.approx(-4.444444444444445, rel=1e-12)

    def test_three_quarters_case(self):
        # x = 0.75: reciprocal form -1.5, boundary term -4/3
        l = math.sqrt(0.75)
        values = kepler_spectrum(1.0, 1.0, l, -0.5)
        assert values.reciprocal_level_value == pytest.approx(-1.5, rel=1e-12)
        assert values.boundary_term_value == pytest.approx(-4.0 / 3.0, rel=1e-12)

    def test_small_x_limit(self):
        values = kepler_spectrum(1.0, 1.0, 0.05, -0.5)
        assert -0.01 < values.reciprocal_level_value < 0.0

    def test_circular_orbit_degenerate(self):
        with pytest.raises(DomainError):
            kepler_spectrum(1.0, 1.0, 1.0, -0.5)

    def test_boundary_term_matches_annulus_quadrature(self):
        system = kepler_system(alpha=1.0, mass=1.0, energy=-0.5, angular_momentum=0.6)
        values = kepler_spectrum(1.0, 1.0, 0.6, -0.5)
        r_minus, r_plus = kepler_apsidal(1.0, 1.0, 0.6, -0.5)
        report = integrate_euler(system, RegularizedDomain.radial(r_minus, r_plus))
        assert report.value == pytest.approx(values.boundary_term_value, rel=1e-6)

    def test_params_container_validation(self):
        params = KeplerSpectrumParams(1.0, 1.0, 0.6, -0.5)
        assert params.x == pytest.approx(0.36)
        assert params.apsidal == pytest.approx((0.2, 1.8))
        with pytest.raises(DomainError):
            KeplerSpectrumParams(1.0, 1.0, 0.6, 0.5)


class TestSolveLevel:
    def test_harmonic_inverse_of_forward_evaluation(self):
        relation = harmonic_relation(k_spring=1.0, E=1.0)
        root = solve_level(relation, -0.2857142857142857, "q0", (0.01, 1.2))
        assert root == pytest.approx(0.5, abs=1e-9)

    def test_kepler_energy_recovery(self):
        relation = kepler_reciprocal_relation(1.0, 1.0, 0.6)
        root = solve_level(relation, -0.45, "abs_energy", (0.05, 1.3))
        assert root == pytest.approx(0.5, abs=1e-9)

    def test_boundary_relation_round_trip(self):
        relation = kepler_boundary_relation(1.0, 1.0, 0.6)
        hi = 1.0 / (2.0 * 0.36)
        for n in (-1.0, -2.0, -3.5):
            root = solve_level(relation, n, "abs_energy", (1e-6 * hi, (1 - 1e-9) * hi))
            assert relation.evaluate(abs_energy=root) == pytest.approx(n, abs=1e-9)

    def test_no_sign_change_raises(self):
        relation = harmonic_relation(k_spring=1.0, E=1.0)
        with pytest.raises(SolveError):
            solve_level(relation, -50.0, "q0", (0.01, 0.1))

    def test_nonmonotone_relation_warns(self):
        relation = SpectrumRelation(
            name="wiggle",
            fn=lambda values: math.sin(6.0 * values["x"]),
            fixed={},
            admissible={},
        )
        with pytest.warns(UserWarning, match="not monotone"):
            solve_level(relation, 0.0, "x", (0.4, 2.8))

    def test_admissible_range_enforced(self):
        relation = kepler_boundary_relation(1.0, 1.0, 0.6)
        with pytest.raises(DomainError):
            relation.evaluate(abs_energy=5.0)  # x > 1


class TestSpectrumTable:
    def test_rows_and_csv(self):
        relation = kepler_boundary_relation(1.0, 1.0, 0.6)
        hi = 1.0 / (2.0 * 0.36)
        rows = spectrum_table(
            relation, [-1, -2, -3], "abs_energy", (1e-6 * hi, (1 - 1e-9) * hi)
        )
        assert [row.n for row in rows] == [-1.0, -2.0, -3.0]
        for row in rows:
            assert abs(row.residual) < 1e-9
        text = spectrum_table_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "n,param_name,param_value,f_value,residual"
        assert len(lines) == 4
        assert lines[1].split(",")[1] == "abs_energy"
