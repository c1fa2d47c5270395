//! Simple cut-off estimates for every tolerance at once.
//!
//! After sorting the samples by distance, the estimate at tolerance `eps` is
//! the plain average over the `m_eps` samples with `T_k <= eps`, so one pass of
//! running moments yields the whole curve in `O(n log n)`.

use crate::chain::ChainTrace;
use crate::error::{Error, Result};

/// Right-continuous step function of `eps`, defined on the sorted unique distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceCurve {
    /// Strictly increasing grid of tolerances.
    pub epsilons: Vec<f64>,
    pub means: Vec<f64>,
    pub var_terms: Vec<f64>,
    /// Number of samples with `T_k <= eps`.
    pub counts: Vec<usize>,
}

/// One point of a [`ToleranceCurve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub mean: f64,
    pub var_term: f64,
    pub count: usize,
}

impl ToleranceCurve {
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn point(&self, i: usize) -> CurvePoint {
        CurvePoint {
            epsilon: self.epsilons[i],
            mean: self.means[i],
            var_term: self.var_terms[i],
            count: self.counts[i],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = CurvePoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Values at an arbitrary `eps`: those of the largest grid point `<= eps`.
    /// `None` below the smallest distance, where no sample survives.
    pub fn at(&self, epsilon: f64) -> Option<CurvePoint> {
        let idx = self.epsilons.partition_point(|&e| e <= epsilon);
        (idx > 0).then(|| self.point(idx - 1))
    }
}

/// Sweep over `(f(theta_k), T_k)` pairs.
pub fn sweep_values(values: &[f64], distances: &[f64]) -> Result<ToleranceCurve> {
    if values.is_empty() {
        return Err(Error::Domain("tolerance sweep needs a non-empty trace".into()));
    }
    if values.len() != distances.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: distances.len(),
        });
    }
    if distances.iter().any(|d| d.is_nan()) {
        return Err(Error::Domain("distances must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));

    let mut curve = ToleranceCurve {
        epsilons: Vec::new(),
        means: Vec::new(),
        var_terms: Vec::new(),
        counts: Vec::new(),
    };
    // Welford running mean and sum of squared deviations
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (pos, &k) in order.iter().enumerate() {
        let m = (pos + 1) as f64;
        let v = values[k];
        let d = v - mean;
        mean += d / m;
        m2 += d * (v - mean);

        let last_of_group = order
            .get(pos + 1)
            .is_none_or(|&next| distances[next] != distances[k]);
        if last_of_group {
            curve.epsilons.push(distances[k]);
            curve.means.push(mean);
            curve.var_terms.push(m2 / (m * m));
            curve.counts.push(pos + 1);
        }
    }
    Ok(curve)
}

/// Sweep of a simple cut-off trace for the function `f`.
pub fn tolerance_sweep<F: Fn(&[f64]) -> f64>(trace: &ChainTrace, f: F) -> Result<ToleranceCurve> {
    let values: Vec<f64> = trace.thetas().map(f).collect();
    sweep_values(&values, &trace.distances())
}
