"""Numerical geometry of static vacuum metrics.

Metrics and potentials are opaque objects created by :func:`metric` and the
field constructors; operations return dicts of floats and numpy arrays.
Library errors raise :class:`StaticGeoError`.
"""

from ._staticgeo import (
    REPORT_SCHEMA_VERSION,
    Metric,
    ScalarField,
    StaticGeoError,
    SurfacePatch,
    adm_mass_flux,
    boundary_identity,
    conformal_flow,
    constant_field,
    coordinate_field,
    coordinate_sphere,
    curvature,
    fit_expansion,
    jacobi_residual,
    linear_field,
    mass_from_potential,
    metric,
    metric_names,
    minimal_disk,
    ode_trials,
    plateau_sequence,
    ricci_flux_mass,
    run_suite,
    scalar_constancy,
    solve_annulus,
    stability_eigenvalue,
    static_residual,
    suite_names,
    surface_summary,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
