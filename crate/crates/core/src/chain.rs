//! The ABC-MCMC transition and the fixed-tolerance chain runner.
//!
//! Each iteration proposes `theta~ ~ N(theta, Sigma)`, simulates pseudo-data
//! at `theta~` and accepts with probability
//!
//! ```text
//! min{1, pr(theta~) q(theta~, theta) phi(T~/delta) / (pr(theta) q(theta, theta~) phi(T/delta))}
//! ```
//!
//! All ratios are evaluated in log space; a vanishing kernel or prior is a
//! log-weight of `-inf`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapt::CovarianceAdaptation;
use crate::error::{Error, Result};
use crate::kernel::CutoffKernel;
use crate::model::Model;
use crate::proposal::GaussianProposal;

/// Redraws allowed at the starting parameter to find a positive kernel value.
pub const DEFAULT_INIT_ATTEMPTS: usize = 10_000;

/// Which per-iteration records to keep in the trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Capture {
    /// Proposed state and acceptance probability, for waste recycling.
    pub proposals: bool,
    /// Centered summaries, for regression correction.
    pub summaries: bool,
}

/// The proposal made at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRecord {
    pub theta: Vec<f64>,
    pub distance: f64,
    pub alpha: f64,
}

/// One chain state.
///
/// `proposal`, when captured, describes the move attempted *into* this
/// iteration, i.e. the proposal made from the previous state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample {
    pub theta: Vec<f64>,
    pub distance: f64,
    pub proposal: Option<ProposalRecord>,
    pub summaries: Option<Vec<f64>>,
}

/// Retained chain output with run metadata.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub samples: Vec<ChainSample>,
    pub delta: f64,
    pub cutoff: CutoffKernel,
    pub seed: u64,
    pub n_burn: usize,
    pub n_keep: usize,
    /// Accepted moves among the retained iterations.
    pub accept_count: usize,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.n_keep == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.n_keep as f64
        }
    }

    pub fn distances(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.distance).collect()
    }

    pub fn thetas(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.theta.as_slice())
    }
}

/// Acceptance probability of moving from `current = (theta, T)` to `proposed`.
///
/// `log_q_ratio` is `ln q(theta~, theta) - ln q(theta, theta~)`, zero for
/// symmetric proposals. The current state must have positive prior density
/// and positive kernel value.
pub fn acceptance_probability<M: Model>(
    current: (&[f64], f64),
    proposed: (&[f64], f64),
    delta: f64,
    cutoff: &CutoffKernel,
    model: &M,
    log_q_ratio: f64,
) -> Result<f64> {
    check_delta(delta)?;
    let lp_cur = model.log_prior(current.0);
    let lk_cur = cutoff.log_eval(current.1 / delta)?;
    if lp_cur == f64::NEG_INFINITY || lk_cur == f64::NEG_INFINITY {
        return Err(Error::InvalidState(format!(
            "current state has log prior {lp_cur} and log kernel {lk_cur}"
        )));
    }
    let lp_prop = model.log_prior(proposed.0);
    if lp_prop == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let lk_prop = cutoff.log_eval(proposed.1 / delta)?;
    Ok(alpha_from_logs(lp_prop - lp_cur + log_q_ratio + lk_prop - lk_cur))
}

fn alpha_from_logs(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
        0.0
    } else if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "tolerance must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}

/// Result of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: ChainSample,
    pub accepted: bool,
    pub alpha: f64,
}

/// One ABC-MCMC iteration with a symmetric Gaussian random-walk proposal.
pub fn mcmc_step<M: Model, R: Rng + ?Sized>(
    state: &ChainSample,
    delta: f64,
    cutoff: &CutoffKernel,
    model: &M,
    proposal: &GaussianProposal,
    capture: Capture,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_delta(delta)?;
    if model.log_prior(&state.theta) == f64::NEG_INFINITY
        || cutoff.log_eval(state.distance / delta)? == f64::NEG_INFINITY
    {
        return Err(Error::InvalidState(format!(
            "state at distance {} has zero weight at delta = {delta}",
            state.distance
        )));
    }
    Ok(step_inner(state, delta, cutoff, model, proposal, capture, rng))
}

/// Like [`mcmc_step`], but a current state whose kernel value has dropped
/// to zero (after the tolerance shrank) is treated as having kernel value 1.
pub(crate) fn lenient_step<M: Model, R: Rng + ?Sized>(
    state: &ChainSample,
    delta: f64,
    cutoff: &CutoffKernel,
    model: &M,
    proposal: &GaussianProposal,
    capture: Capture,
    rng: &mut R,
) -> StepOutcome {
    step_inner(state, delta, cutoff, model, proposal, capture, rng)
}

fn step_inner<M: Model, R: Rng + ?Sized>(
    state: &ChainSample,
    delta: f64,
    cutoff: &CutoffKernel,
    model: &M,
    proposal: &GaussianProposal,
    capture: Capture,
    rng: &mut R,
) -> StepOutcome {
    let theta_prop = proposal.propose(&state.theta, rng);
    let lp_prop = model.log_prior(&theta_prop);

    let (alpha, obs) = if lp_prop == f64::NEG_INFINITY {
        (0.0, None)
    } else {
        let obs = model.simulate(&theta_prop, rng);
        let lk_prop = cutoff.log_eval_unchecked(obs.distance / delta);
        let lk_cur = match cutoff.log_eval_unchecked(state.distance / delta) {
            l if l == f64::NEG_INFINITY => 0.0,
            l => l,
        };
        let lp_cur = model.log_prior(&state.theta);
        (alpha_from_logs(lp_prop - lp_cur + lk_prop - lk_cur), Some(obs))
    };

    let accepted = if alpha >= 1.0 {
        true
    } else if alpha <= 0.0 {
        false
    } else {
        rng.random::<f64>() < alpha
    };

    let record = capture.proposals.then(|| ProposalRecord {
        theta: theta_prop.clone(),
        distance: obs.as_ref().map_or(f64::INFINITY, |o| o.distance),
        alpha,
    });

    let next = match (accepted, obs) {
        (true, Some(obs)) => ChainSample {
            theta: theta_prop,
            distance: obs.distance,
            proposal: record,
            summaries: if capture.summaries { obs.summaries } else { None },
        },
        _ => ChainSample {
            theta: state.theta.clone(),
            distance: state.distance,
            proposal: record,
            summaries: state.summaries.clone(),
        },
    };
    StepOutcome {
        state: next,
        accepted,
        alpha,
    }
}

/// Where the chain starts.
#[derive(Debug, Clone)]
pub enum Start {
    /// A parameter value in the prior support; pseudo-data is drawn afresh.
    Theta(Vec<f64>),
    /// A full state; pseudo-data is redrawn only if its kernel value is zero.
    State(ChainSample),
    /// A draw from the prior.
    Prior,
}

/// How the random-walk covariance evolves.
#[derive(Debug, Clone)]
pub enum ProposalScheme {
    Fixed(DMatrix<f64>),
    /// Adaptive Metropolis: covariance `(2.38^2 / n) Gamma_k`, updated every iteration.
    Adaptive(CovarianceAdaptation),
}

impl ProposalScheme {
    /// Fixed covariance `variance * I`.
    pub fn isotropic(dim: usize, variance: f64) -> Self {
        ProposalScheme::Fixed(DMatrix::identity(dim, dim) * variance)
    }
}

/// Settings of a fixed-tolerance run.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub delta: f64,
    pub cutoff: CutoffKernel,
    pub n_burn: usize,
    pub n_keep: usize,
    pub start: Start,
    pub proposal: ProposalScheme,
    pub capture: Capture,
    pub init_attempts: usize,
}

impl ChainConfig {
    pub fn new(
        delta: f64,
        cutoff: CutoffKernel,
        n_burn: usize,
        n_keep: usize,
        start: Start,
        proposal: ProposalScheme,
    ) -> Self {
        ChainConfig {
            delta,
            cutoff,
            n_burn,
            n_keep,
            start,
            proposal,
            capture: Capture::default(),
            init_attempts: DEFAULT_INIT_ATTEMPTS,
        }
    }
}

/// Final proposal state of a run, for continuing it elsewhere.
#[derive(Debug, Clone)]
pub struct ChainEnd {
    pub state: ChainSample,
    pub proposal: ProposalScheme,
}

/// Runs `n_burn + n_keep` iterations at fixed tolerance and keeps the last `n_keep`.
pub fn run_chain<M: Model>(model: &M, config: &ChainConfig, seed: u64) -> Result<ChainTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_chain_with_rng(model, config, seed, &mut rng).map(|(trace, _)| trace)
}

/// As [`run_chain`] with an external RNG stream; `seed` is recorded as metadata only.
pub fn run_chain_with_rng<M: Model, R: Rng + ?Sized>(
    model: &M,
    config: &ChainConfig,
    seed: u64,
    rng: &mut R,
) -> Result<(ChainTrace, ChainEnd)> {
    let delta = config.delta;
    check_delta(delta)?;
    let cutoff = &config.cutoff;

    let mut state = initial_state(model, config, rng)?;
    let mut scheme = config.proposal.clone();
    let mut fixed = match &scheme {
        ProposalScheme::Fixed(cov) => {
            check_dim(model.dim(), cov.nrows())?;
            Some(GaussianProposal::new(cov)?)
        }
        ProposalScheme::Adaptive(ad) => {
            check_dim(model.dim(), ad.mu.len())?;
            None
        }
    };

    let mut samples = Vec::with_capacity(config.n_keep);
    let mut accept_count = 0;
    for it in 0..config.n_burn + config.n_keep {
        let outcome = match (&mut scheme, &mut fixed) {
            (_, Some(p)) => step_inner(&state, delta, cutoff, model, p, config.capture, rng),
            (ProposalScheme::Adaptive(ad), None) => {
                let p = ad.proposal()?;
                let o = step_inner(&state, delta, cutoff, model, &p, config.capture, rng);
                ad.update(&o.state.theta)?;
                o
            }
            (ProposalScheme::Fixed(_), None) => unreachable!("fixed proposal is prebuilt"),
        };
        state = outcome.state;
        if it >= config.n_burn {
            if outcome.accepted {
                accept_count += 1;
            }
            samples.push(state.clone());
        }
    }

    let trace = ChainTrace {
        samples,
        delta,
        cutoff: cutoff.clone(),
        seed,
        n_burn: config.n_burn,
        n_keep: config.n_keep,
        accept_count,
    };
    Ok((
        trace,
        ChainEnd {
            state,
            proposal: scheme,
        },
    ))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn start_theta<M: Model, R: Rng + ?Sized>(
    model: &M,
    start: &Start,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let theta = match start {
        Start::Theta(t) => t.clone(),
        Start::State(s) => s.theta.clone(),
        Start::Prior => model.sample_prior(rng),
    };
    check_dim(model.dim(), theta.len())?;
    if !model.in_support(&theta) {
        return Err(Error::Domain(format!(
            "starting value {theta:?} is outside the prior support"
        )));
    }
    Ok(theta)
}

fn initial_state<M: Model, R: Rng + ?Sized>(
    model: &M,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainSample> {
    let theta = start_theta(model, &config.start, rng)?;
    if let Start::State(s) = &config.start {
        let has_summaries = !config.capture.summaries || s.summaries.is_some();
        if has_summaries
            && config.cutoff.log_eval_unchecked(s.distance / config.delta) > f64::NEG_INFINITY
        {
            let mut s = s.clone();
            s.proposal = None;
            if !config.capture.summaries {
                s.summaries = None;
            }
            return Ok(s);
        }
    }
    for _ in 0..config.init_attempts {
        let obs = model.simulate(&theta, rng);
        if config.cutoff.log_eval_unchecked(obs.distance / config.delta) > f64::NEG_INFINITY {
            return Ok(ChainSample {
                theta,
                distance: obs.distance,
                proposal: None,
                summaries: if config.capture.summaries {
                    obs.summaries
                } else {
                    None
                },
            });
        }
    }
    Err(Error::Initialization {
        attempts: config.init_attempts,
        reason: format!(
            "no pseudo-data with positive kernel value at delta = {}",
            config.delta
        ),
    })
}
