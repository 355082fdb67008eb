//! Measurements on micro and field states: pair correlations and their
//! scaling collapse, domain boundaries with curvature and speed, domain-size
//! decay, terminal-state classification and fits.

mod boundary;
mod correlation;
mod stats;
mod terminal;

pub use boundary::{
    curvature_and_speed, curvature_radii, extract_boundary, extract_zero_contours, fit_circle,
    BoundarySample, Contour, CurvatureSpeed, BOUNDARY_CSV_HEADER, MIN_CONTOUR_POINTS,
};
pub use correlation::{
    collapse_error, pair_correlation, CorrelationBin, CorrelationCurve, CorrelationOptions,
    CorrelationSource, COLLAPSE_GRID_POINTS, LOW_CONFIDENCE_COUNT, MAX_TORUS_DISTANCE,
};
pub use stats::{
    fit_power_law, linear_fit, mean, median, quasi_equilibrium_bins, variance, welch_t_test,
    LinearFit, PowerLawFit, QuasiEquilibriumBin, WelchTest, FIT_CSV_HEADER,
};
pub use terminal::{
    classify_field, classify_micro, coarse_grain, fit_domain_size, is_stripe_pattern,
    write_domain_size_csv, DomainSizeFit, TerminalState, CONSENSUS_THRESHOLD,
};
