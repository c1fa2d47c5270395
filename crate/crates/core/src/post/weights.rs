use crate::chain::ChainTrace;
use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;

/// Correction weights from simulation tolerance `delta` to target `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTrace {
    /// `u_k = phi(T_k / eps) / phi_s(T_k / delta)`
    pub u: Vec<f64>,
    /// `w_k = u_k / sum_j u_j`
    pub w: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
}

impl WeightedTrace {
    /// Number of samples with a positive weight.
    pub fn support_count(&self) -> usize {
        self.u.iter().filter(|&&u| u > 0.0).count()
    }
}

/// Correction weights with a common cut-off for simulation and correction.
pub fn correction_weights(
    distances: &[f64],
    delta: f64,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<WeightedTrace> {
    correction_weights_mixed(distances, delta, cutoff, epsilon, cutoff)
}

/// Correction weights when the chain ran with `sim_cutoff` and the estimate
/// uses `post_cutoff`.
pub fn correction_weights_mixed(
    distances: &[f64],
    delta: f64,
    sim_cutoff: &CutoffKernel,
    epsilon: f64,
    post_cutoff: &CutoffKernel,
) -> Result<WeightedTrace> {
    if !(epsilon > 0.0 && epsilon <= delta && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < epsilon <= delta, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    let mut u = Vec::with_capacity(distances.len());
    for &t in distances {
        let log_sim = sim_cutoff.log_eval(t / delta)?;
        if log_sim == f64::NEG_INFINITY {
            return Err(Error::InvalidState(format!(
                "sample at distance {t} has zero kernel value at delta = {delta}"
            )));
        }
        let log_post = post_cutoff.log_eval(t / epsilon)?;
        u.push((log_post - log_sim).exp());
    }
    let total: f64 = u.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::AllZeroWeights { epsilon });
    }
    let w = u.iter().map(|x| x / total).collect();
    Ok(WeightedTrace {
        u,
        w,
        epsilon,
        delta,
    })
}

/// `sum_k w_k v_k`
pub fn weighted_mean(values: &[f64], w: &[f64]) -> f64 {
    values.iter().zip(w).map(|(v, w)| v * w).sum()
}

/// `sum_k w_k^2 (v_k - mean)^2`
pub fn weighted_var_term(values: &[f64], w: &[f64], mean: f64) -> f64 {
    values
        .iter()
        .zip(w)
        .map(|(v, w)| {
            let d = w * (v - mean);
            d * d
        })
        .sum()
}

fn evaluate<F: Fn(&[f64]) -> f64>(trace: &ChainTrace, f: F) -> Vec<f64> {
    trace.thetas().map(f).collect()
}

/// Post-corrected estimate `E_{delta,eps}(f) = sum_k W_k f(theta_k)`.
pub fn corrected_mean<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<f64> {
    let wt = correction_weights_mixed(&trace.distances(), trace.delta, &trace.cutoff, epsilon, cutoff)?;
    Ok(weighted_mean(&evaluate(trace, f), &wt.w))
}

/// Variance term `S_{delta,eps}(f) = sum_k W_k^2 (f(theta_k) - E)^2`.
pub fn corrected_var_term<F: Fn(&[f64]) -> f64>(
    trace: &ChainTrace,
    f: F,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<f64> {
    let wt = correction_weights_mixed(&trace.distances(), trace.delta, &trace.cutoff, epsilon, cutoff)?;
    let values = evaluate(trace, f);
    let mean = weighted_mean(&values, &wt.w);
    Ok(weighted_var_term(&values, &wt.w, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn trace(thetas: &[f64], distances: &[f64], delta: f64, cutoff: CutoffKernel) -> ChainTrace {
        ChainTrace {
            samples: thetas
                .iter()
                .zip(distances)
                .map(|(&t, &d)| ChainSample {
                    theta: vec![t],
                    distance: d,
                    proposal: None,
                    summaries: None,
                })
                .collect(),
            delta,
            cutoff,
            seed: 0,
            n_burn: 0,
            n_keep: thetas.len(),
            accept_count: 0,
        }
    }

    #[test]
    fn simple_weights() {
        let wt = correction_weights(&[0.5, 1.5, 2.5], 3.0, 1.0, &CutoffKernel::Simple).unwrap();
        assert_eq!(wt.u, vec![1.0, 0.0, 0.0]);
        assert_eq!(wt.w, vec![1.0, 0.0, 0.0]);
        assert_eq!(wt.support_count(), 1);
    }

    #[test]
    fn identity_correction() {
        let d = [0.1, 2.0, 0.7, 2.9];
        for k in [CutoffKernel::Simple, CutoffKernel::Gaussian, CutoffKernel::Epanechnikov] {
            let wt = correction_weights(&d, 3.0, 3.0, &k).unwrap();
            assert!(wt.u.iter().all(|&u| u == 1.0));
            assert!(wt.w.iter().all(|&w| w == 0.25));
        }
    }

    #[test]
    fn gaussian_weights() {
        let wt = correction_weights(&[1.0, 2.0], 2.0, 1.0, &CutoffKernel::Gaussian).unwrap();
        assert_relative_eq!(wt.u[0], (-0.375f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(wt.u[1], (-1.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(wt.u[0], 0.687_289_278_790_972_2, epsilon = 1e-12);
        assert_relative_eq!(wt.u[1], 0.223_130_160_148_429_83, epsilon = 1e-12);
    }

    #[test]
    fn all_zero_weights_is_an_error() {
        let err = correction_weights(&[0.5, 1.5], 3.0, 0.1, &CutoffKernel::Simple).unwrap_err();
        assert_eq!(err, Error::AllZeroWeights { epsilon: 0.1 });
    }

    #[test]
    fn epsilon_above_delta_is_rejected() {
        assert!(correction_weights(&[0.5], 1.0, 2.0, &CutoffKernel::Simple).is_err());
    }

    #[test]
    fn sample_outside_simulation_support_is_rejected() {
        let err = correction_weights(&[0.5, 4.0], 3.0, 1.0, &CutoffKernel::Simple).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn mixed_cutoffs() {
        // Epanechnikov correction of a simple-cut-off chain
        let wt = correction_weights_mixed(
            &[0.5, 1.5],
            2.0,
            &CutoffKernel::Simple,
            1.0,
            &CutoffKernel::Epanechnikov,
        )
        .unwrap();
        assert_eq!(wt.u, vec![0.75, 0.0]);
    }

    #[test]
    fn estimator_examples() {
        let tr = trace(&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5], 3.0, CutoffKernel::Simple);
        let id = |t: &[f64]| t[0];
        assert_eq!(corrected_mean(&tr, id, 1.0, &CutoffKernel::Simple).unwrap(), 1.0);
        assert_eq!(corrected_var_term(&tr, id, 1.0, &CutoffKernel::Simple).unwrap(), 0.0);
        assert_relative_eq!(corrected_mean(&tr, id, 3.0, &CutoffKernel::Simple).unwrap(), 2.0);

        let tr = trace(&[1.0, 2.0], &[1.0, 2.0], 2.0, CutoffKernel::Gaussian);
        let (u1, u2) = ((-0.375f64).exp(), (-1.5f64).exp());
        let e = corrected_mean(&tr, id, 1.0, &CutoffKernel::Gaussian).unwrap();
        assert_relative_eq!(e, (u1 + 2.0 * u2) / (u1 + u2), epsilon = 1e-15);
        assert_relative_eq!(e, 1.245_085, epsilon = 1e-5);

        let w = [0.5, 0.5];
        let v = [0.0, 2.0];
        let m = weighted_mean(&v, &w);
        assert_eq!(m, 1.0);
        assert_eq!(weighted_var_term(&v, &w, m), 0.5);
    }

    proptest! {
        #[test]
        fn weights_normalize(
            d in proptest::collection::vec(0.0f64..3.0, 1..200),
            eps_frac in 0.05f64..1.0,
            which in 0usize..3,
        ) {
            let k = [CutoffKernel::Simple, CutoffKernel::Gaussian, CutoffKernel::Epanechnikov][which].clone();
            let delta = 3.0 + 1e-9;
            if let Ok(wt) = correction_weights(&d, delta, eps_frac * delta, &k) {
                prop_assert!((wt.w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(wt.w.iter().all(|&w| w >= 0.0));
            }
        }

        #[test]
        fn equal_tolerances_give_plain_moments(
            pts in proptest::collection::vec((-5.0f64..5.0, 0.0f64..2.0), 1..100),
        ) {
            let th: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let d: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let tr = trace(&th, &d, 2.0, CutoffKernel::Simple);
            let n = th.len() as f64;
            let mean = th.iter().sum::<f64>() / n;
            let var = th.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n * n);
            let e = corrected_mean(&tr, |t| t[0], 2.0, &CutoffKernel::Simple).unwrap();
            let s = corrected_var_term(&tr, |t| t[0], 2.0, &CutoffKernel::Simple).unwrap();
            prop_assert!((e - mean).abs() <= 1e-12);
            prop_assert!((s - var).abs() <= 1e-12);
        }

        #[test]
        fn simple_support_grows_with_epsilon(
            d in proptest::collection::vec(0.0f64..3.0, 1..200),
            e1 in 0.01f64..3.0,
            e2 in 0.01f64..3.0,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let count = |e: f64| correction_weights(&d, 3.0, e, &CutoffKernel::Simple)
                .map(|w| w.support_count())
                .unwrap_or(0);
            prop_assert!(count(lo) <= count(hi));
        }
    }
}
