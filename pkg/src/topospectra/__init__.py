"""Topological spectra of conservative mechanical systems.

The pipeline: build the Jacobi metric 2 (E - V) g on the allowed region
E > V, compute its orthonormal-frame connection and curvature, integrate
the resulting class densities, and solve the discretization relations
f(parameters) = n that they produce.  Cross-validated by integrating the
Newtonian and Jacobi-geodesic dynamics of the same systems.
"""

from .errors import ConfigError, DimensionError, DomainError, SolveError, TopospectraError
from .scalar_fields import (
    CartesianMassMetric,
    CentralPotential,
    FreePotential,
    GeneralKineticMetric,
    GridSampledPotential,
    HarmonicPotential,
    KeplerPotential,
    MechanicalSystem,
    PolarKineticMetric,
    SigmaDomain,
    central_system,
    effective_radial_system,
    evaluate_potential,
    free_system,
    harmonic_system,
    kepler_system,
    potential_gradient,
    sigma_contains,
    turning_points,
)
from .jacobi_geometry import (
    ConnectionForm,
    Coframe,
    CurvatureForm,
    FrameRotation,
    JacobiMetricPoint,
    check_cocycle,
    check_compatibility,
    coframe_at,
    connection_one_form,
    curvature_two_form,
    first_structure_residual,
    jacobi_metric,
    second_structure_residual,
    transform_frame,
)
from .dynamics import (
    GeodesicState,
    NewtonianState,
    Trajectory,
    first_variation_check,
    integrate_geodesic,
    integrate_newton,
    launch_state,
    maupertuis_action,
    reparametrize,
)
from .characteristic_classes import (
    EulerDensity,
    IntegrationReport,
    PontrjaginSet,
    RegularizedDomain,
    central_field_boundary_term,
    euler_density,
    euler_integral_ho_reduced,
    integrate_euler,
    pontrjagin_forms,
)
from .spectra import (
    HOSpectrumParams,
    KeplerSpectrumParams,
    KeplerSpectrumValues,
    SpectrumRelation,
    harmonic_relation,
    ho_canonical_map,
    ho_topological_spectrum,
    kepler_apsidal,
    kepler_boundary_relation,
    kepler_reciprocal_relation,
    kepler_spectrum,
    solve_level,
    spectrum_table,
)

__version__ = "0.1.0"
