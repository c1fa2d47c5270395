//! Ground truth for the Gaussian toy model.
//!
//! The pseudo-posterior `pi_eps(theta) ∝ pr(theta) L_eps(theta)` has a closed-form
//! smoothed likelihood `L_eps(theta) = E[phi(|theta + sigma Z| / eps)]` for the
//! built-in cut-offs; its moments are then obtained by 1-D quadrature.

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;
use crate::models::gaussian::GaussianToy;

const QUAD_TOL: f64 = 1e-8;

/// Test functions with a known pseudo-posterior expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleFunction {
    Identity,
    AbsoluteValue,
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `L_eps(theta)` for the toy model.
pub fn smoothed_likelihood(
    model: &GaussianToy,
    theta: f64,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<f64> {
    let s = model.obs_sd;
    match cutoff {
        CutoffKernel::Simple => {
            Ok(std_normal_cdf((epsilon - theta) / s) - std_normal_cdf((-epsilon - theta) / s))
        }
        CutoffKernel::Gaussian => {
            let v = epsilon * epsilon + s * s;
            Ok(epsilon / v.sqrt() * (-0.5 * theta * theta / v).exp())
        }
        CutoffKernel::Epanechnikov => {
            // truncated moments of Y = theta + s Z on [-eps, eps]
            let a = (-epsilon - theta) / s;
            let b = (epsilon - theta) / s;
            let p = std_normal_cdf(b) - std_normal_cdf(a);
            let m1 = std_normal_pdf(a) - std_normal_pdf(b);
            let m2 = p + a * std_normal_pdf(a) - b * std_normal_pdf(b);
            let ey2 = theta * theta * p + 2.0 * theta * s * m1 + s * s * m2;
            Ok((p - ey2 / (epsilon * epsilon)).max(0.0))
        }
        CutoffKernel::Custom { .. } => Err(Error::Domain(
            "the quadrature oracle supports only the built-in cut-offs".into(),
        )),
    }
}

/// `E_{pi_eps}[f(theta)]` for the toy model by adaptive quadrature.
pub fn gaussian_posterior_oracle(
    model: &GaussianToy,
    f: OracleFunction,
    epsilon: f64,
    cutoff: &CutoffKernel,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    smoothed_likelihood(model, 0.0, epsilon, cutoff)?;
    let s = model.obs_sd;
    let reach = match cutoff {
        CutoffKernel::Gaussian => 40.0 * (epsilon * epsilon + s * s).sqrt(),
        _ => epsilon + 40.0 * s,
    };
    let bound = reach.min(12.0 * model.prior_sd);

    let density = |t: f64| {
        let z = t / model.prior_sd;
        (-0.5 * z * z).exp() * smoothed_likelihood(model, t, epsilon, cutoff).unwrap_or(0.0)
    };
    // Panels no wider than the likelihood scale keep the integrand smooth on
    // each piece; the overall error is checked against the summed estimates.
    let width = s.max(epsilon / 4.0);
    let panels = ((bound / width).ceil() as usize).clamp(1, 400);
    let integrate = |g: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> Result<f64> {
        let h = (hi - lo) / panels as f64;
        let (mut total, mut err) = (0.0, 0.0);
        for i in 0..panels {
            let a = lo + i as f64 * h;
            let b = if i + 1 == panels { hi } else { a + h };
            let out = double_exponential::integrate(g, a, b, QUAD_TOL * 1e-4);
            total += out.integral;
            err += out.error_estimate;
        }
        if !err.is_finite() || err > QUAD_TOL * 1e-2 * total.abs().max(1.0) {
            return Err(Error::Quadrature {
                error_estimate: err,
            });
        }
        Ok(total)
    };

    // split at zero where |theta| has its kink
    let z_neg = integrate(&density, -bound, 0.0)?;
    let z_pos = integrate(&density, 0.0, bound)?;
    let norm = z_neg + z_pos;
    if norm <= 0.0 {
        return Err(Error::Quadrature {
            error_estimate: f64::NAN,
        });
    }
    let first_neg = integrate(&|t| t * density(t), -bound, 0.0)?;
    let first_pos = integrate(&|t| t * density(t), 0.0, bound)?;
    Ok(match f {
        OracleFunction::Identity => (first_neg + first_pos) / norm,
        OracleFunction::AbsoluteValue => (first_pos - first_neg) / norm,
    })
}
