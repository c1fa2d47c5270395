//! One replicate: run the chain, then every requested estimator.

use abcpost::adapt::{run_adaptive_burnin_with_rng, BurninConfig};
use abcpost::chain::{run_chain_with_rng, Capture, ChainConfig, ChainTrace, ProposalScheme, Start};
use abcpost::post::{
    adjusted_series, estimate_at, iact, regression_fit, tolerance_sweep, waste_recycled_mean,
};
use abcpost::seed::derive_seed;
use abcpost::{CovarianceAdaptation, CutoffKernel, Error, Functional, Model, StepSchedule};
use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{EpsilonSpec, EstimatorKind, Mode, ModelConfig, RunConfig};
use crate::output::{flag, ResultRow};

/// Everything one replicate produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutput {
    pub index: u64,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
    /// Tolerance after each burn-in iteration (adaptive mode).
    pub delta_trajectory: Option<Vec<f64>>,
    /// Set when the chain itself could not be run.
    pub failure: Option<String>,
}

/// Runs replicate `index` of `cfg` with its derived seed.
pub fn run_replicate(cfg: &RunConfig, index: u64) -> ReplicateOutput {
    let seed = derive_seed(cfg.seed, index);
    let result = match &cfg.model {
        ModelConfig::Gaussian(m) => run_with(m, cfg, index, seed),
        ModelConfig::LotkaVolterra(m) => run_with(m, cfg, index, seed),
    };
    match result {
        Ok((rows, delta_trajectory)) => ReplicateOutput {
            index,
            seed,
            rows,
            delta_trajectory,
            failure: None,
        },
        Err(e) => ReplicateOutput {
            index,
            seed,
            rows: Vec::new(),
            delta_trajectory: None,
            failure: Some(format!("{e:#}")),
        },
    }
}

type ChainResult = (ChainTrace, Option<Vec<f64>>);

fn simulate<M: Model>(model: &M, cfg: &RunConfig, seed: u64) -> Result<ChainResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cutoff = cfg.cutoff_kernel()?;
    let capture = Capture {
        proposals: cfg.needs_proposals(),
        summaries: cfg.needs_summaries(),
    };
    let theta0 = match cfg.start_theta()? {
        Some(t) => t,
        None => model.sample_prior(&mut rng),
    };
    match cfg.mode {
        Mode::Fixed => {
            let proposal = if cfg.proposal.adaptive {
                ProposalScheme::Adaptive(CovarianceAdaptation::identity(
                    &theta0,
                    StepSchedule::covariance_default(),
                ))
            } else {
                ProposalScheme::isotropic(model.dim(), cfg.proposal.variance)
            };
            let mut chain_cfg = ChainConfig::new(
                cfg.delta.expect("validated"),
                cutoff,
                cfg.n_burn,
                cfg.n_keep,
                Start::Theta(theta0),
                proposal,
            );
            chain_cfg.capture = capture;
            chain_cfg.init_attempts = cfg.init_attempts;
            let (trace, _) = run_chain_with_rng(model, &chain_cfg, seed, &mut rng)?;
            Ok((trace, None))
        }
        Mode::Adaptive => {
            let mut burn =
                BurninConfig::new(cutoff.clone(), cfg.n_burn, cfg.adapt.target_rate, Start::Theta(theta0));
            burn.schedule = cfg.adapt.schedule()?;
            burn.bounds = cfg.adapt.bounds()?;
            let b = run_adaptive_burnin_with_rng(model, &burn, &mut rng)?;
            let proposal = if cfg.adapt.adapt_cov_always {
                ProposalScheme::Adaptive(b.adapt.am.clone())
            } else {
                ProposalScheme::Fixed(b.adapt.am.proposal_covariance())
            };
            let mut chain_cfg = ChainConfig::new(
                b.delta_final,
                cutoff,
                0,
                cfg.n_keep,
                Start::State(b.state.clone()),
                proposal,
            );
            chain_cfg.capture = capture;
            chain_cfg.init_attempts = cfg.init_attempts;
            let (mut trace, _) = run_chain_with_rng(model, &chain_cfg, seed, &mut rng)?;
            trace.n_burn = cfg.n_burn;
            Ok((trace, Some(b.delta_trajectory)))
        }
    }
}

fn run_with<M: Model>(
    model: &M,
    cfg: &RunConfig,
    index: u64,
    seed: u64,
) -> Result<(Vec<ResultRow>, Option<Vec<f64>>)> {
    let (trace, traj) = simulate(model, cfg, seed)?;
    let rows = estimate_rows(&trace, cfg, index, seed)?;
    Ok((rows, traj))
}

/// IACT with a constant series mapped to 1.
fn iact_or_one(series: &[f64]) -> Result<(f64, bool)> {
    match iact(series) {
        Ok(t) => Ok((t, false)),
        Err(Error::ConstantSeries) => {
            log::warn!("constant series, using an autocorrelation time of 1");
            Ok((1.0, true))
        }
        Err(e) => Err(e.into()),
    }
}

fn error_flag(e: &Error) -> &'static str {
    match e {
        Error::AllZeroWeights { .. } => flag::ALL_ZERO_WEIGHTS,
        Error::SingularDesign { .. } => flag::SINGULAR,
        Error::InsufficientSupport { .. } => flag::INSUFFICIENT_SUPPORT,
        _ => flag::ERROR,
    }
}

/// Rows for every (epsilon, estimator, function) of a finished trace.
pub fn estimate_rows(
    trace: &ChainTrace,
    cfg: &RunConfig,
    index: u64,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let post_cutoff = cfg.post_cutoff_kernel()?;
    let delta = trace.delta;
    let acc = trace.acceptance_rate();
    let blank = |epsilon: f64, estimator: EstimatorKind, f: &Functional, flag: &str| ResultRow {
        replicate: index,
        seed,
        delta_final: delta,
        epsilon,
        estimator,
        function: f.to_string(),
        e: f64::NAN,
        s: f64::NAN,
        tau: f64::NAN,
        ci_low: f64::NAN,
        ci_high: f64::NAN,
        support_count: 0,
        acceptance_rate: acc,
        flag: flag.to_string(),
    };

    let mut rows = Vec::new();
    for f in &cfg.functions {
        let values: Vec<f64> = trace.thetas().map(|t| f.apply(t)).collect();
        let (tau, constant) = iact_or_one(&values)?;
        let ok_flag = if constant { flag::CONSTANT_SERIES } else { flag::OK };

        if let EpsilonSpec::Keyword(_) = cfg.epsilons {
            let curve = tolerance_sweep(trace, |t| f.apply(t))?;
            for p in curve.points() {
                let (ci_low, ci_high) =
                    abcpost::post::confidence_interval(p.mean, p.var_term, tau, cfg.z);
                rows.push(ResultRow {
                    e: p.mean,
                    s: p.var_term,
                    tau,
                    ci_low,
                    ci_high,
                    support_count: p.count,
                    ..blank(p.epsilon, EstimatorKind::Post, f, ok_flag)
                });
            }
            continue;
        }
        let EpsilonSpec::List(eps_list) = &cfg.epsilons else {
            unreachable!()
        };

        // the regression autocorrelation time depends on f only
        let mut reg_tau: Option<Result<(f64, bool), Error>> = None;
        for &eps in eps_list {
            for &est in &cfg.estimators {
                if eps > delta {
                    rows.push(blank(eps, est, f, flag::EXCLUDED));
                    continue;
                }
                let row = match est {
                    EstimatorKind::Post => {
                        match estimate_at(trace, |t| f.apply(t), eps, &post_cutoff, tau, cfg.z) {
                            Ok(p) => ResultRow {
                                e: p.mean_e,
                                s: p.var_term_s,
                                tau,
                                ci_low: p.ci_low,
                                ci_high: p.ci_high,
                                support_count: p.support_count,
                                ..blank(eps, est, f, ok_flag)
                            },
                            Err(e) => blank(eps, est, f, error_flag(&e)),
                        }
                    }
                    EstimatorKind::Regression => {
                        let t = reg_tau.get_or_insert_with(|| {
                            let series = adjusted_series(trace, |t| f.apply(t), &post_cutoff)?;
                            match iact(&series) {
                                Ok(t) => Ok((t, false)),
                                Err(Error::ConstantSeries) => Ok((1.0, true)),
                                Err(e) => Err(e),
                            }
                        });
                        match (regression_fit(trace, |t| f.apply(t), eps, &post_cutoff), t.clone()) {
                            (Ok(fit), Ok((t, constant))) => {
                                let support = fit.support_count;
                                let r = fit.with_iact(t, cfg.z);
                                let fl = if constant { flag::CONSTANT_SERIES } else { flag::OK };
                                ResultRow {
                                    e: r.a_hat,
                                    s: r.var_term,
                                    tau: t,
                                    ci_low: r.ci_low,
                                    ci_high: r.ci_high,
                                    support_count: support,
                                    ..blank(eps, est, f, fl)
                                }
                            }
                            (Err(e), _) | (_, Err(e)) => blank(eps, est, f, error_flag(&e)),
                        }
                    }
                    EstimatorKind::WasteRecycled => {
                        match waste_recycled_mean(trace, |t| f.apply(t), eps, &post_cutoff) {
                            Ok(m) => ResultRow {
                                e: m,
                                support_count: support_count(trace, eps, &post_cutoff),
                                ..blank(eps, est, f, flag::OK)
                            },
                            Err(e) => blank(eps, est, f, error_flag(&e)),
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn support_count(trace: &ChainTrace, eps: f64, cutoff: &CutoffKernel) -> usize {
    trace
        .samples
        .iter()
        .filter(|s| cutoff.eval(s.distance / eps).is_ok_and(|v| v > 0.0))
        .count()
}
