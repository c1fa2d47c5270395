//! Integrated autocorrelation time with Sokal's adaptive window.

use crate::error::{Error, Result};

/// Upper limit on the truncation lag.
pub const MAX_WINDOW: usize = 10_000;

/// Window constant `c` in the rule `M >= c * tau(M)`.
pub const SOKAL_C: f64 = 5.0;

/// Windowed estimate `tau = 1 + 2 sum_{k=1}^M rho_k`.
///
/// `rho_k` is the biased sample autocorrelation (autocovariance divided by `n`,
/// normalized by the lag-0 value). `M` is the smallest lag with
/// `M >= 5 tau(M)`, capped at `min(n - 1, 10^4)`. Negative estimates, which
/// occur for antithetic series, are reported as 0.
pub fn iact(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "autocorrelation needs at least 2 values, got {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(Error::ConstantSeries);
    }

    let cap = (n - 1).min(MAX_WINDOW);
    let mut sum = 0.0;
    let mut tau = 1.0;
    for lag in 1..=cap {
        let ck: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        sum += ck / c0;
        tau = 1.0 + 2.0 * sum;
        if lag as f64 >= SOKAL_C * tau {
            break;
        }
    }
    Ok(tau.max(0.0))
}
