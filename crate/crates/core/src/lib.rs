//! ABC-MCMC with an inflated tolerance, post-correction of the output to
//! any finer tolerance, and burn-in adaptation of the tolerance.

pub mod adapt;
pub mod chain;
pub mod error;
pub mod functional;
pub mod kernel;
pub mod model;
pub mod models;
pub mod post;
pub mod proposal;
pub mod seed;

pub use adapt::{
    run_adaptive_burnin, AdaptState, AdaptiveBurnin, BurninConfig, CovarianceAdaptation, StepSchedule,
    ToleranceBounds,
};
pub use chain::{
    mcmc_step, run_chain, Capture, ChainConfig, ChainSample, ChainTrace, ProposalRecord,
    ProposalScheme, Start,
};
pub use error::{Error, Result};
pub use functional::Functional;
pub use kernel::CutoffKernel;
pub use model::{Model, PseudoObservation};
pub use proposal::GaussianProposal;
