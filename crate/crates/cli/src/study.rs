//! Command orchestration: replicates on a worker pool, per-replicate files,
//! deterministic merge and summary outputs.
//!
//! Output directory layout:
//!
//! ```text
//! results.csv            per-replicate rows, sorted by replicate
//! aggregate.csv          coverage / RMSE table (replicate and adapt)
//! delta_trajectory.csv   burn-in tolerances (adaptive mode)
//! metadata.json          config echo, versions, timing, failures
//! replicates/            one file set per finished replicate, used by --resume-from
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{aggregate, excluded_count, write_aggregate, AggregateRow, TruthSource};
use crate::config::{Mode, ModelConfig, RunConfig};
use crate::engine::{run_replicate, ReplicateOutput};
use crate::output::{read_rows, read_trajectory, write_rows, write_trajectory, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    Replicate,
    Adapt,
}

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub threads: Option<usize>,
    pub adapt_cov_always: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(a) = self.adapt_cov_always {
            cfg.adapt.adapt_cov_always = a;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub replicate: u64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: Command,
    pub version: &'static str,
    pub config: RunConfig,
    pub replicates: u64,
    pub resumed_from: u64,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub failed_replicates: usize,
    pub failures: Vec<Failure>,
    pub excluded_rows: usize,
    pub result_columns: Vec<&'static str>,
}

/// In-memory result of a study.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub rows: Vec<ResultRow>,
    pub aggregate: Vec<AggregateRow>,
    pub trajectories: Vec<(u64, Vec<f64>)>,
    pub failures: Vec<Failure>,
}

impl StudyOutput {
    /// Mean acceptance rate over replicates, one value per replicate.
    pub fn mean_acceptance_rate(&self) -> f64 {
        let mut per_rep: Vec<(u64, f64)> = self.rows.iter().map(|r| (r.replicate, r.acceptance_rate)).collect();
        per_rep.dedup_by_key(|p| p.0);
        per_rep.iter().map(|p| p.1).sum::<f64>() / per_rep.len() as f64
    }
}

fn check_command(cmd: Command, cfg: &RunConfig) -> Result<()> {
    match (cmd, cfg.mode) {
        (Command::Adapt, Mode::Fixed) => bail!("the adapt command needs mode = \"adaptive\""),
        (Command::Run, _) if cfg.reps != 1 => bail!("the run command executes a single chain; use replicate"),
        _ => Ok(()),
    }
}

/// Ground truth used by the aggregate table.
pub fn truth_source(cfg: &RunConfig) -> Result<TruthSource> {
    Ok(match &cfg.model {
        ModelConfig::Gaussian(m) => TruthSource::GaussianOracle {
            model: *m,
            cutoff: cfg.post_cutoff_kernel()?,
        },
        ModelConfig::LotkaVolterra(_) => TruthSource::Pooled,
    })
}

/// Runs replicates `from..cfg.reps` on `cfg.threads` workers, merged by index.
///
/// `on_done` is called from the worker as soon as each replicate finishes.
pub fn run_replicates<F>(cfg: &RunConfig, from: u64, on_done: F) -> Result<Vec<ReplicateOutput>>
where
    F: Fn(&ReplicateOutput) -> Result<()> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("cannot build worker pool")?;
    let mut outs: Vec<ReplicateOutput> = pool.install(|| {
        (from..cfg.reps)
            .into_par_iter()
            .map(|i| {
                let out = run_replicate(cfg, i);
                on_done(&out).map(|_| out)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    outs.sort_by_key(|o| o.index);
    Ok(outs)
}

fn rep_paths(dir: &Path, index: u64) -> (PathBuf, PathBuf, PathBuf) {
    let d = dir.join("replicates");
    (
        d.join(format!("rep-{index:08}.csv")),
        d.join(format!("traj-{index:08}.csv")),
        d.join(format!("fail-{index:08}.txt")),
    )
}

fn save_replicate(dir: &Path, out: &ReplicateOutput) -> Result<()> {
    let (rows, traj, fail) = rep_paths(dir, out.index);
    if let Some(msg) = &out.failure {
        fs::write(&fail, format!("{}\n{}\n", out.seed, msg))?;
    }
    if let Some(t) = &out.delta_trajectory {
        write_trajectory(BufWriter::new(File::create(&traj)?), &[(out.index, t.clone())])?;
    }
    // rows last: their presence marks the replicate as complete
    let tmp = rows.with_extension("tmp");
    write_rows(BufWriter::new(File::create(&tmp)?), &out.rows)?;
    fs::rename(&tmp, &rows)?;
    log::info!("replicate {} done", out.index);
    Ok(())
}

fn load_replicate(dir: &Path, index: u64, seed: u64) -> Result<ReplicateOutput> {
    let (rows, traj, fail) = rep_paths(dir, index);
    let r = read_rows(File::open(&rows).with_context(|| {
        format!("--resume-from needs the files of replicate {index} in {}", rows.display())
    })?)?;
    let delta_trajectory = if traj.exists() {
        read_trajectory(File::open(&traj)?)?.pop().map(|(_, v)| v)
    } else {
        None
    };
    let failure = if fail.exists() {
        let text = fs::read_to_string(&fail)?;
        Some(text.lines().skip(1).collect::<Vec<_>>().join("\n"))
    } else {
        None
    };
    Ok(ReplicateOutput {
        index,
        seed,
        rows: r,
        delta_trajectory,
        failure,
    })
}

/// Merges replicate outputs into the study tables.
pub fn summarize(cfg: &RunConfig, outs: &[ReplicateOutput]) -> Result<StudyOutput> {
    let rows: Vec<ResultRow> = outs.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    let table = aggregate(&rows, &truth_source(cfg)?);
    Ok(StudyOutput {
        rows,
        aggregate: table,
        trajectories: outs
            .iter()
            .filter_map(|o| o.delta_trajectory.clone().map(|t| (o.index, t)))
            .collect(),
        failures: outs
            .iter()
            .filter_map(|o| {
                o.failure.clone().map(|error| Failure {
                    replicate: o.index,
                    seed: o.seed,
                    error,
                })
            })
            .collect(),
    })
}

/// Runs a study in memory, without touching the file system.
pub fn run_study(cfg: &RunConfig) -> Result<StudyOutput> {
    let outs = run_replicates(cfg, 0, |_| Ok(()))?;
    summarize(cfg, &outs)
}

/// Executes a command and writes all outputs to `out_dir`.
pub fn execute(
    cmd: Command,
    mut cfg: RunConfig,
    overrides: &Overrides,
    out_dir: &Path,
    resume_from: u64,
) -> Result<StudyOutput> {
    overrides.apply(&mut cfg);
    cfg.validate()?;
    check_command(cmd, &cfg)?;
    if resume_from > cfg.reps {
        bail!("--resume-from {resume_from} exceeds the replicate count {}", cfg.reps);
    }
    let started = Instant::now();
    fs::create_dir_all(out_dir.join("replicates"))
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let mut outs = Vec::with_capacity(cfg.reps as usize);
    for i in 0..resume_from {
        outs.push(load_replicate(out_dir, i, abcpost::seed::derive_seed(cfg.seed, i))?);
    }
    outs.extend(run_replicates(&cfg, resume_from, |o| save_replicate(out_dir, o))?);
    let study = summarize(&cfg, &outs)?;

    write_rows(BufWriter::new(File::create(out_dir.join("results.csv"))?), &study.rows)?;
    if cmd != Command::Run {
        write_aggregate(
            BufWriter::new(File::create(out_dir.join("aggregate.csv"))?),
            &study.aggregate,
        )?;
    }
    if cfg.mode == Mode::Adaptive {
        write_trajectory(
            BufWriter::new(File::create(out_dir.join("delta_trajectory.csv"))?),
            &study.trajectories,
        )?;
    }
    for f in &study.failures {
        log::warn!("replicate {} failed: {}", f.replicate, f.error);
    }
    let meta = Metadata {
        command: cmd,
        version: env!("CARGO_PKG_VERSION"),
        replicates: cfg.reps,
        resumed_from: resume_from,
        threads: cfg.threads,
        wall_time_secs: started.elapsed().as_secs_f64(),
        failed_replicates: study.failures.len(),
        failures: study.failures.clone(),
        excluded_rows: excluded_count(&study.rows),
        result_columns: crate::output::RESULT_COLUMNS.to_vec(),
        config: cfg,
    };
    serde_json::to_writer_pretty(
        BufWriter::new(File::create(out_dir.join("metadata.json"))?),
        &meta,
    )?;
    Ok(study)
}
