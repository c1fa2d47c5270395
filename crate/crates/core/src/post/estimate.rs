use serde::{Deserialize, Serialize};

use crate::chain::ChainTrace;
use crate::error::Result;
use crate::kernel::CutoffKernel;
use crate::post::weights::{correction_weights_mixed, weighted_mean, weighted_var_term, WeightedTrace};

/// Two-sided 95% normal quantile.
pub const DEFAULT_Z: f64 = 1.959964;

/// Post-corrected estimate at one target tolerance with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostEstimate {
    pub epsilon: f64,
    pub mean_e: f64,
    pub var_term_s: f64,
    pub iact: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub support_count: usize,
}

/// `[E - z sqrt(S tau), E + z sqrt(S tau)]` for `S, tau >= 0`.
pub fn confidence_interval(mean_e: f64, var_term_s: f64, iact_tau: f64, quantile_z: f64) -> (f64, f64) {
    let half = quantile_z * (var_term_s * iact_tau).sqrt();
    (mean_e - half, mean_e + half)
}

/// Estimate from precomputed `f` values and weights, with a common IACT `tau`.
pub fn post_estimate(values: &[f64], weights: &WeightedTrace, tau: f64, z: f64) -> PostEstimate {
    let mean_e = weighted_mean(values, &weights.w);
    let var_term_s = weighted_var_term(values, &weights.w, mean_e);
    let (ci_low, ci_high) = confidence_interval(mean_e, var_term_s, tau, z);
    PostEstimate {
        epsilon: weights.epsilon,
        mean_e,
        var_term_s,
        iact: tau,
        ci_low,
        ci_high,
        support_count: weights.support_count(),
    }
}

/// Estimate of `E_{pi_eps}[f]` from a trace, using `cutoff` for the correction.
pub fn estimate_at<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
    tau: f64,
    z: f64,
) -> Result<PostEstimate> {
    let weights =
        correction_weights_mixed(&trace.distances(), trace.delta, &trace.cutoff, epsilon, cutoff)?;
    let values: Vec<f64> = trace.thetas().map(f).collect();
    Ok(post_estimate(&values, &weights, tau, z))
}
