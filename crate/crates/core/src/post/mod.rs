//! Estimators computed from a stored trace.

pub mod estimate;
pub mod iact;
pub mod recycle;
pub mod regression;
pub mod sweep;
pub mod weights;

pub use estimate::{confidence_interval, estimate_at, post_estimate, PostEstimate, DEFAULT_Z};
pub use iact::iact;
pub use recycle::waste_recycled_mean;
pub use regression::{
    adjusted_series, regression_correct, regression_fit, weighted_least_squares, RegressionEstimate,
    RegressionFit, WlsFit,
};
pub use sweep::{sweep_values, tolerance_sweep, CurvePoint, ToleranceCurve};
pub use weights::{
    corrected_mean, corrected_var_term, correction_weights, correction_weights_mixed, WeightedTrace,
};
