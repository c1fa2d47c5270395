//! Batch front-end for ABC-MCMC post-correction studies.

pub mod aggregate;
pub mod config;
pub mod engine;
pub mod output;
pub mod study;

pub use config::RunConfig;
pub use study::{execute, run_study, Command, Overrides, StudyOutput};
