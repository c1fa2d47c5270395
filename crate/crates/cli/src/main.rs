use std::path::PathBuf;
use std::process::ExitCode;

use abcpost_cli::{execute, Command, Overrides, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abc-post", version, about = "ABC-MCMC with post-correction of the tolerance")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single chain with estimates at the configured tolerances
    Run(Args),
    /// Independent replicates with coverage and RMSE tables
    Replicate(Args),
    /// Tolerance-adaptive burn-in followed by estimation
    Adapt(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates
    #[arg(long)]
    reps: Option<u64>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reuse the stored files of replicates below this index
    #[arg(long, default_value_t = 0)]
    resume_from: u64,
    /// Keep adapting the proposal covariance after burn-in
    #[arg(long, action = clap::ArgAction::Set)]
    adapt_cov_always: Option<bool>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Replicate(a) => (Command::Replicate, a),
        Cmd::Adapt(a) => (Command::Adapt, a),
    };
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let overrides = Overrides {
            seed: args.seed,
            reps: args.reps,
            threads: args.threads,
            adapt_cov_always: args.adapt_cov_always,
        };
        execute(cmd, cfg, &overrides, &args.out, args.resume_from)
    });
    match result {
        Ok(study) => {
            if !study.failures.is_empty() {
                eprintln!("{} replicate(s) failed; see metadata.json", study.failures.len());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
