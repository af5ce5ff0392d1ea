"""Spatial aggregation of prevalence, risk and burden from cluster surveys."""

from ._core import (
    ConvergenceError,
    Domain,
    FieldParams,
    FitOptions,
    LatentPosterior,
    NuggetMode,
    ResponseParams,
    TwoRegionSpec,
    ValidationError,
    aggregate,
    analytic_mse,
    ci_width,
    crps_ensemble,
    desk_domain,
    fuzzy_coverage,
    gauss_hermite,
    grid_resolution_test,
    interval_score,
    laplace_fit,
    matern_correlation,
    mc_mse,
    normalized_mse,
    quantile,
    run_cli,
    simulate,
    smooth_risk,
)

__version__ = "0.1.0"
