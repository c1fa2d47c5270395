//! Waste-recycling estimator.
//!
//! Each transition `k -> k+1` contributes both the proposal `theta~` (weight
//! `alpha_k`) and the current state (weight `1 - alpha_k`), each multiplied by
//! its correction weight `u = phi(T/eps) / phi_s(T/delta)`. The proposal made
//! from sample `k` is stored on sample `k + 1`, so the sum runs over the first
//! `n - 1` samples.

use crate::chain::ChainTrace;
use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;

/// Waste-recycled estimate of `E_{pi_eps}[f]`, normalized over `k = 1..n-1`.
pub fn waste_recycled_mean<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<f64> {
    let delta = trace.delta;
    if !(epsilon > 0.0 && epsilon <= delta && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < epsilon <= delta, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    if trace.len() < 2 {
        return Err(Error::InsufficientSupport {
            needed: 2,
            found: trace.len(),
        });
    }
    let u = |t: f64| -> Result<f64> {
        let log_sim = trace.cutoff.log_eval(t / delta)?;
        if log_sim == f64::NEG_INFINITY {
            return Err(Error::InvalidState(format!(
                "distance {t} has zero kernel value at delta = {delta}"
            )));
        }
        Ok((cutoff.log_eval(t / epsilon)? - log_sim).exp())
    };

    let mut num = 0.0;
    let mut den = 0.0;
    for pair in trace.samples.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let rec = next
            .proposal
            .as_ref()
            .ok_or(Error::CaptureDisabled("proposals"))?;
        if rec.alpha > 0.0 {
            let w = rec.alpha * u(rec.distance)?;
            num += w * f(&rec.theta);
            den += w;
        }
        if rec.alpha < 1.0 {
            let w = (1.0 - rec.alpha) * u(cur.distance)?;
            num += w * f(&cur.theta);
            den += w;
        }
    }
    if den.is_nan() || den <= 0.0 {
        return Err(Error::AllZeroWeights { epsilon });
    }
    Ok(num / den)
}
