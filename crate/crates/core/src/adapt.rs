//! Burn-in tuning: Robbins-Monro adaptation of the log-tolerance towards a
//! target acceptance rate, combined with adaptive-Metropolis estimation of
//! the proposal covariance.
//!
//! Both recursions are driven by a polynomially decaying step size
//! `gamma_k = C k^(-r)`. Iteration `k` (1-based) of a run uses
//! `gamma_{k + 1}`, so that the first update keeps half of the initial
//! covariance instead of overwriting it with a rank-one outer product.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainSample, Start};
use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;
use crate::model::Model;
use crate::proposal::GaussianProposal;

/// Scale of the adaptive-Metropolis proposal, `2.38^2 / n_theta`.
pub const AM_SCALE: f64 = 2.38 * 2.38;

/// Offset between the iteration counter and the step-size index.
pub const STEP_INDEX_SHIFT: u64 = 1;

/// Default number of redraws when the initial distance is zero or infinite.
pub const DEFAULT_BURNIN_INIT_ATTEMPTS: usize = 100;

/// Step sizes `gamma_k = scale * k^(-exponent)` with `exponent` in `(1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub exponent: f64,
    pub scale: f64,
}

impl StepSchedule {
    pub fn new(exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::Domain(format!(
                "step-size exponent must lie in (1/2, 1], got {exponent}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "step-size scale must be positive, got {scale}"
            )));
        }
        Ok(StepSchedule { exponent, scale })
    }

    /// `k^(-2/3)`, used when the tolerance is adapted.
    pub fn tolerance_default() -> Self {
        StepSchedule {
            exponent: 2.0 / 3.0,
            scale: 1.0,
        }
    }

    /// `k^(-1)`, used for covariance adaptation alone.
    pub fn covariance_default() -> Self {
        StepSchedule {
            exponent: 1.0,
            scale: 1.0,
        }
    }
}

pub fn step_size(schedule: &StepSchedule, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("step-size index must be at least 1".into()));
    }
    Ok(schedule.scale * (k as f64).powf(-schedule.exponent))
}

/// Hard bounds `[delta_min, delta_max]` on the adapted tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceBounds {
    pub delta_min: f64,
    pub delta_max: f64,
}

impl ToleranceBounds {
    pub fn new(delta_min: f64, delta_max: f64) -> Result<Self> {
        if !(delta_min > 0.0 && delta_min <= delta_max && delta_max.is_finite()) {
            return Err(Error::Domain(format!(
                "tolerance bounds must satisfy 0 < min <= max < inf, got [{delta_min}, {delta_max}]"
            )));
        }
        Ok(ToleranceBounds {
            delta_min,
            delta_max,
        })
    }

    pub fn clamp_log(&self, log_delta: f64) -> f64 {
        log_delta.clamp(self.delta_min.ln(), self.delta_max.ln())
    }
}

impl Default for ToleranceBounds {
    fn default() -> Self {
        ToleranceBounds {
            delta_min: 1e-8,
            delta_max: 1e8,
        }
    }
}

/// One Robbins-Monro step on the log-tolerance, projected onto the bounds.
pub fn tolerance_update(
    log_delta: f64,
    gamma_k: f64,
    target: f64,
    realized: f64,
    bounds: &ToleranceBounds,
) -> f64 {
    bounds.clamp_log(log_delta + gamma_k * (target - realized))
}

/// Adaptive-Metropolis mean and covariance recursions.
///
/// The outer product uses the mean *before* this update.
pub fn am_update(
    mu: &DVector<f64>,
    gamma_mat: &DMatrix<f64>,
    theta_new: &[f64],
    gamma_k: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mu.len();
    if theta_new.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta_new.len(),
        });
    }
    if gamma_mat.nrows() != n || gamma_mat.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gamma_mat.nrows(),
        });
    }
    let diff = DVector::from_column_slice(theta_new) - mu;
    let mu_new = mu + &diff * gamma_k;
    let outer = &diff * diff.transpose();
    let mut gamma_new = gamma_mat + (outer - gamma_mat) * gamma_k;
    // keep exact symmetry against rounding
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (gamma_new[(i, j)] + gamma_new[(j, i)]);
            gamma_new[(i, j)] = v;
            gamma_new[(j, i)] = v;
        }
    }
    Ok((mu_new, gamma_new))
}

/// Running mean and covariance of the adaptive-Metropolis proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAdaptation {
    pub mu: DVector<f64>,
    pub gamma_mat: DMatrix<f64>,
    /// Number of updates applied so far.
    pub k: u64,
    pub schedule: StepSchedule,
}

impl CovarianceAdaptation {
    /// Starts from `mu = theta0` and the identity covariance.
    pub fn identity(theta0: &[f64], schedule: StepSchedule) -> Self {
        let n = theta0.len();
        CovarianceAdaptation {
            mu: DVector::from_column_slice(theta0),
            gamma_mat: DMatrix::identity(n, n),
            k: 0,
            schedule,
        }
    }

    /// Step size used by the next update.
    pub fn next_step_size(&self) -> f64 {
        step_size(&self.schedule, self.k + 1 + STEP_INDEX_SHIFT)
            .expect("index is at least 1")
    }

    pub fn proposal_covariance(&self) -> DMatrix<f64> {
        let n = self.mu.len() as f64;
        &self.gamma_mat * (AM_SCALE / n)
    }

    pub fn proposal(&self) -> Result<GaussianProposal> {
        GaussianProposal::new(&self.proposal_covariance())
    }

    pub fn update(&mut self, theta_new: &[f64]) -> Result<()> {
        let gamma = self.next_step_size();
        let (mu, g) = am_update(&self.mu, &self.gamma_mat, theta_new, gamma)?;
        self.mu = mu;
        self.gamma_mat = g;
        self.k += 1;
        Ok(())
    }
}

/// Joint tolerance and covariance adaptation state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptState {
    pub log_delta: f64,
    pub target_rate: f64,
    pub bounds: ToleranceBounds,
    /// Mean, covariance, iteration counter and the shared step schedule.
    pub am: CovarianceAdaptation,
}

impl AdaptState {
    pub fn delta(&self) -> f64 {
        self.log_delta.exp()
    }

    /// Applies one tolerance update with acceptance probability `alpha`,
    /// then the mean/covariance update with the new state, sharing one step size.
    pub fn update(&mut self, alpha: f64, theta_new: &[f64]) -> Result<()> {
        let gamma = self.am.next_step_size();
        self.log_delta = tolerance_update(
            self.log_delta,
            gamma,
            self.target_rate,
            alpha,
            &self.bounds,
        );
        self.am.update(theta_new)
    }
}

/// Settings of the tolerance-adaptive burn-in.
#[derive(Debug, Clone)]
pub struct BurninConfig {
    pub cutoff: CutoffKernel,
    pub n_b: usize,
    pub target_rate: f64,
    pub schedule: StepSchedule,
    pub bounds: ToleranceBounds,
    pub start: Start,
    /// Redraws allowed while the initial distance is zero or infinite.
    pub init_attempts: usize,
}

impl BurninConfig {
    pub fn new(cutoff: CutoffKernel, n_b: usize, target_rate: f64, start: Start) -> Self {
        BurninConfig {
            cutoff,
            n_b,
            target_rate,
            schedule: StepSchedule::tolerance_default(),
            bounds: ToleranceBounds::default(),
            start,
            init_attempts: DEFAULT_BURNIN_INIT_ATTEMPTS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_b == 0 {
            return Err(Error::Domain("burn-in length must be at least 1".into()));
        }
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return Err(Error::Domain(format!(
                "target acceptance rate must lie in (0, 1), got {}",
                self.target_rate
            )));
        }
        Ok(())
    }
}

/// Output of the adaptive burn-in.
#[derive(Debug, Clone)]
pub struct AdaptiveBurnin {
    /// Final chain state `(theta, T)`.
    pub state: ChainSample,
    pub delta_final: f64,
    pub gamma_mat_final: DMatrix<f64>,
    /// Final adaptation state, for continuing the covariance adaptation.
    pub adapt: AdaptState,
    /// Tolerance after each burn-in iteration (length `n_b`).
    pub delta_trajectory: Vec<f64>,
    /// Chain states after each burn-in iteration.
    pub samples: Vec<ChainSample>,
    pub accept_count: usize,
}

/// Runs the tolerance and covariance adaptive burn-in with a fresh RNG.
pub fn run_adaptive_burnin<M: Model>(
    model: &M,
    config: &BurninConfig,
    seed: u64,
) -> Result<AdaptiveBurnin> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_adaptive_burnin_with_rng(model, config, &mut rng)
}

pub fn run_adaptive_burnin_with_rng<M: Model, R: rand::Rng + ?Sized>(
    model: &M,
    config: &BurninConfig,
    rng: &mut R,
) -> Result<AdaptiveBurnin> {
    config.validate()?;
    let theta0 = chain::start_theta(model, &config.start, rng)?;

    // delta := T_0 > 0, redrawn while T_0 is zero or infinite
    let mut initial = None;
    for _ in 0..config.init_attempts.max(1) {
        let obs = model.simulate(&theta0, rng);
        if obs.distance > 0.0 && obs.distance.is_finite() {
            initial = Some(obs);
            break;
        }
    }
    let obs = initial.ok_or_else(|| Error::Initialization {
        attempts: config.init_attempts,
        reason: "initial distance was zero or infinite on every draw".into(),
    })?;

    let mut adapt = AdaptState {
        log_delta: config.bounds.clamp_log(obs.distance.ln()),
        target_rate: config.target_rate,
        bounds: config.bounds,
        am: CovarianceAdaptation::identity(&theta0, config.schedule),
    };
    let mut state = ChainSample {
        theta: theta0,
        distance: obs.distance,
        proposal: None,
        summaries: obs.summaries,
    };

    let mut delta_trajectory = Vec::with_capacity(config.n_b);
    let mut samples = Vec::with_capacity(config.n_b);
    let mut accept_count = 0;
    for _ in 0..config.n_b {
        let proposal = adapt.am.proposal()?;
        let outcome = chain::lenient_step(
            &state,
            adapt.delta(),
            &config.cutoff,
            model,
            &proposal,
            chain::Capture {
                proposals: false,
                summaries: true,
            },
            rng,
        );
        if outcome.accepted {
            accept_count += 1;
        }
        adapt.update(outcome.alpha, &outcome.state.theta)?;
        state = outcome.state;
        delta_trajectory.push(adapt.delta());
        samples.push(state.clone());
    }

    Ok(AdaptiveBurnin {
        state,
        delta_final: adapt.delta(),
        gamma_mat_final: adapt.am.gamma_mat.clone(),
        adapt,
        delta_trajectory,
        samples,
        accept_count,
    })
}
