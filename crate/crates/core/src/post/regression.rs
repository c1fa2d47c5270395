//! Regression-adjusted post-correction.
//!
//! With centered summaries `s_k = s(Y_k) - s(y*)` and correction weights `W_k`,
//! the weighted least-squares fit of `f(theta_k) ~ a + s_k^T b` gives the
//! adjusted estimate `a_hat`. The fit is solved through an SVD of the
//! row-scaled design `diag(sqrt(W)) M`, which also yields the `(1,1)` entry of
//! `(M^T W M)^{-1}` without forming the normal equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ChainTrace;
use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;
use crate::post::estimate::confidence_interval;
use crate::post::iact::iact;
use crate::post::weights::correction_weights_mixed;

/// Relative singular-value threshold below which the design counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

/// Solution of a weighted least-squares problem with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsFit {
    pub intercept: f64,
    pub slopes: Vec<f64>,
    /// `[(M^T W M)^{-1}]_{1,1}`
    pub gram_inv_11: f64,
}

/// Weighted least squares of `values` on `(1, summaries_k)`; rows with zero weight are dropped.
pub fn weighted_least_squares(
    summaries: &[&[f64]],
    values: &[f64],
    weights: &[f64],
) -> Result<WlsFit> {
    let d = summaries.first().map_or(0, |s| s.len());
    let p = d + 1;
    let rows: Vec<usize> = (0..values.len()).filter(|&k| weights[k] > 0.0).collect();
    if rows.len() < p {
        return Err(Error::InsufficientSupport {
            needed: p,
            found: rows.len(),
        });
    }
    let mut a = DMatrix::<f64>::zeros(rows.len(), p);
    let mut rhs = DVector::<f64>::zeros(rows.len());
    for (r, &k) in rows.iter().enumerate() {
        if summaries[k].len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: summaries[k].len(),
            });
        }
        let sw = weights[k].sqrt();
        a[(r, 0)] = sw;
        for j in 0..d {
            a[(r, j + 1)] = sw * summaries[k][j];
        }
        rhs[r] = sw * values[k];
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin.is_nan() || smax.is_nan() || smin <= SINGULAR_TOL * smax {
        return Err(Error::SingularDesign {
            ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let ut_b = u.transpose() * rhs;
    let mut coef = DVector::<f64>::zeros(p);
    let mut gram_inv_11 = 0.0;
    for j in 0..p {
        let vj = v_t.row(j).transpose();
        coef += vj * (ut_b[j] / sv[j]);
        gram_inv_11 += (v_t[(j, 0)] / sv[j]).powi(2);
    }
    Ok(WlsFit {
        intercept: coef[0],
        slopes: coef.iter().skip(1).copied().collect(),
        gram_inv_11,
    })
}

/// Regression-adjusted estimate and its confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEstimate {
    pub epsilon: f64,
    pub a_hat: f64,
    pub b_hat: Vec<f64>,
    pub var_term: f64,
    pub iact_reg: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub support_count: usize,
}

/// Fit at one tolerance, before the autocorrelation estimate is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub epsilon: f64,
    pub a_hat: f64,
    pub b_hat: Vec<f64>,
    /// `[(M^T W M)^{-1}]_{1,1} sum_k W_k^2 (F_k - a_hat)^2`
    pub var_term: f64,
    pub support_count: usize,
}

impl RegressionFit {
    pub fn with_iact(self, tau: f64, z: f64) -> RegressionEstimate {
        let (ci_low, ci_high) = confidence_interval(self.a_hat, self.var_term, tau, z);
        RegressionEstimate {
            epsilon: self.epsilon,
            a_hat: self.a_hat,
            b_hat: self.b_hat,
            var_term: self.var_term,
            iact_reg: tau,
            ci_low,
            ci_high,
            support_count: self.support_count,
        }
    }
}

fn summaries_of(trace: &ChainTrace) -> Result<Vec<&[f64]>> {
    trace
        .samples
        .iter()
        .map(|s| s.summaries.as_deref().ok_or(Error::CaptureDisabled("summaries")))
        .collect()
}

/// Weighted fit at `epsilon` with correction cut-off `cutoff`.
pub fn regression_fit<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<RegressionFit> {
    let summaries = summaries_of(trace)?;
    let d = summaries.first().map_or(0, |s| s.len());
    let wt = correction_weights_mixed(&trace.distances(), trace.delta, &trace.cutoff, epsilon, cutoff)?;
    let support = wt.support_count();
    if support < d + 2 {
        return Err(Error::InsufficientSupport {
            needed: d + 2,
            found: support,
        });
    }
    let values: Vec<f64> = trace.thetas().map(&f).collect();
    let fit = weighted_least_squares(&summaries, &values, &wt.w)?;
    let residual_sum: f64 = values
        .iter()
        .zip(&summaries)
        .zip(&wt.w)
        .map(|((v, s), w)| {
            let adj = v - dot(s, &fit.slopes) - fit.intercept;
            (w * adj).powi(2)
        })
        .sum();
    Ok(RegressionFit {
        epsilon,
        a_hat: fit.intercept,
        b_hat: fit.slopes,
        var_term: fit.gram_inv_11 * residual_sum,
        support_count: support,
    })
}

/// The adjusted series `f(theta_k) - s_k^T b_delta`, with `b_delta` fitted at `eps = delta`.
pub fn adjusted_series<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    cutoff: &CutoffKernel,
) -> Result<Vec<f64>> {
    let summaries = summaries_of(trace)?;
    let fit = regression_fit(trace, &f, trace.delta, cutoff)?;
    Ok(trace
        .thetas()
        .zip(&summaries)
        .map(|(t, s)| f(t) - dot(s, &fit.b_hat))
        .collect())
}

/// Regression-adjusted estimate at `epsilon` with its confidence interval.
pub fn regression_correct<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
    quantile_z: f64,
) -> Result<RegressionEstimate> {
    let fit = regression_fit(trace, &f, epsilon, cutoff)?;
    let tau = iact(&adjusted_series(trace, &f, cutoff)?)?;
    Ok(fit.with_iact(tau, quantile_z))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSample;
    use crate::post::weights::{corrected_mean, corrected_var_term};
    use approx::assert_relative_eq;

    fn trace_with(thetas: &[f64], summaries: &[Vec<f64>], distances: &[f64], delta: f64) -> ChainTrace {
        ChainTrace {
            samples: thetas
                .iter()
                .zip(summaries)
                .zip(distances)
                .map(|((&t, s), &d)| ChainSample {
                    theta: vec![t],
                    distance: d,
                    proposal: None,
                    summaries: Some(s.clone()),
                })
                .collect(),
            delta,
            cutoff: CutoffKernel::Gaussian,
            seed: 0,
            n_burn: 0,
            n_keep: thetas.len(),
            accept_count: 0,
        }
    }

    #[test]
    fn exact_linear_fit() {
        let s: Vec<f64> = vec![-1.0, -0.3, 0.2, 0.8, 1.5, 2.0];
        let th: Vec<f64> = s.iter().map(|x| 2.0 + 3.0 * x).collect();
        let sums: Vec<Vec<f64>> = s.iter().map(|x| vec![*x]).collect();
        let d: Vec<f64> = s.iter().map(|x| x.abs()).collect();
        let tr = trace_with(&th, &sums, &d, 2.0);
        let fit = regression_fit(&tr, |t| t[0], 1.0, &CutoffKernel::Gaussian).unwrap();
        assert_relative_eq!(fit.a_hat, 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.b_hat[0], 3.0, epsilon = 1e-10);
        assert!(fit.var_term.abs() < 1e-10);
    }

    #[test]
    fn intercept_only_reduces_to_post_correction() {
        let th = [0.3, -1.2, 0.8, 2.2, -0.4];
        let d = [0.2, 1.1, 0.5, 1.9, 0.7];
        let sums = vec![Vec::new(); 5];
        let tr = trace_with(&th, &sums, &d, 2.0);
        let k = CutoffKernel::Gaussian;
        let fit = regression_fit(&tr, |t| t[0], 1.0, &k).unwrap();
        let e = corrected_mean(&tr, |t| t[0], 1.0, &k).unwrap();
        let s = corrected_var_term(&tr, |t| t[0], 1.0, &k).unwrap();
        assert_relative_eq!(fit.a_hat, e, epsilon = 1e-10);
        assert_relative_eq!(fit.var_term, s, epsilon = 1e-10);
        assert!(fit.b_hat.is_empty());
    }

    #[test]
    fn collinear_summaries_are_singular() {
        let s: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let th: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let d = vec![0.5; 8];
        let tr = trace_with(&th, &s, &d, 1.0);
        let err = regression_fit(&tr, |t| t[0], 1.0, &CutoffKernel::Gaussian).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }

    #[test]
    fn too_few_support_points() {
        let th = [1.0, 2.0, 3.0];
        let s = vec![vec![0.1], vec![0.2], vec![0.3]];
        let tr = ChainTrace {
            cutoff: CutoffKernel::Simple,
            ..trace_with(&th, &s, &[0.1, 0.2, 2.0], 3.0)
        };
        let err = regression_fit(&tr, |t| t[0], 1.0, &CutoffKernel::Simple).unwrap_err();
        assert_eq!(err, Error::InsufficientSupport { needed: 3, found: 2 });
    }

    #[test]
    fn missing_summaries() {
        let mut tr = trace_with(&[1.0, 2.0, 3.0], &vec![vec![0.0]; 3], &[0.1, 0.2, 0.3], 1.0);
        tr.samples[1].summaries = None;
        assert_eq!(
            regression_fit(&tr, |t| t[0], 1.0, &CutoffKernel::Gaussian).unwrap_err(),
            Error::CaptureDisabled("summaries")
        );
    }

    #[test]
    fn gram_factor_matches_explicit_inverse() {
        let sums: Vec<Vec<f64>> = vec![
            vec![0.1, 1.0],
            vec![-0.5, 0.3],
            vec![0.9, -0.2],
            vec![0.4, 0.4],
            vec![-1.1, 0.7],
            vec![0.0, -0.9],
        ];
        let w = [0.1, 0.2, 0.15, 0.25, 0.1, 0.2];
        let v = [1.0, 0.5, -0.3, 2.0, 1.1, 0.0];
        let refs: Vec<&[f64]> = sums.iter().map(|s| s.as_slice()).collect();
        let fit = weighted_least_squares(&refs, &v, &w).unwrap();

        let m = DMatrix::from_fn(6, 3, |i, j| if j == 0 { 1.0 } else { sums[i][j - 1] });
        let wm = DMatrix::from_diagonal(&DVector::from_column_slice(&w));
        let gram = m.transpose() * &wm * &m;
        let inv = gram.clone().try_inverse().unwrap();
        let coef = &inv * m.transpose() * &wm * DVector::from_column_slice(&v);
        assert_relative_eq!(fit.gram_inv_11, inv[(0, 0)], epsilon = 1e-10);
        assert_relative_eq!(fit.intercept, coef[0], epsilon = 1e-10);
        assert_relative_eq!(fit.slopes[0], coef[1], epsilon = 1e-10);
        assert_relative_eq!(fit.slopes[1], coef[2], epsilon = 1e-10);
    }
}
