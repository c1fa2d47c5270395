//! CSV and JSON output.
//!
//! Floats are written as `{:.16e}` (17 significant digits, exact round trip);
//! undefined values are written as `NaN`.

use std::io::{Read, Write};

use anyhow::{anyhow, Context, Result};

use crate::config::EstimatorKind;

/// Column order of `results.csv`.
pub const RESULT_COLUMNS: [&str; 14] = [
    "replicate",
    "seed",
    "delta_final",
    "epsilon",
    "estimator",
    "function",
    "E",
    "S",
    "tau",
    "ci_low",
    "ci_high",
    "support_count",
    "acceptance_rate",
    "flag",
];

/// Column order of `aggregate.csv`.
pub const AGGREGATE_COLUMNS: [&str; 11] = [
    "estimator",
    "function",
    "epsilon",
    "truth",
    "truth_source",
    "n_included",
    "n_excluded",
    "coverage",
    "rmse",
    "mean_estimate",
    "mean_acceptance_rate",
];

/// Column order of `delta_trajectory.csv`.
pub const TRAJECTORY_COLUMNS: [&str; 3] = ["replicate", "iteration", "delta"];

/// Flags marking rows without a usable estimate.
pub mod flag {
    pub const OK: &str = "";
    pub const EXCLUDED: &str = "excluded";
    pub const ALL_ZERO_WEIGHTS: &str = "all-zero-weights";
    pub const SINGULAR: &str = "singular-design";
    pub const INSUFFICIENT_SUPPORT: &str = "insufficient-support";
    /// Estimate present, autocorrelation time replaced by 1.
    pub const CONSTANT_SERIES: &str = "constant-series";
    pub const ERROR: &str = "error";
}

/// One estimate for one (replicate, epsilon, estimator, function).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub replicate: u64,
    pub seed: u64,
    pub delta_final: f64,
    pub epsilon: f64,
    pub estimator: EstimatorKind,
    pub function: String,
    pub e: f64,
    pub s: f64,
    pub tau: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub support_count: usize,
    pub acceptance_rate: f64,
    pub flag: String,
}

impl ResultRow {
    /// Whether the row carries a usable point estimate.
    pub fn is_usable(&self) -> bool {
        (self.flag == flag::OK || self.flag == flag::CONSTANT_SERIES) && self.e.is_finite()
    }

    fn to_record(&self) -> [String; 14] {
        [
            self.replicate.to_string(),
            self.seed.to_string(),
            fmt_f64(self.delta_final),
            fmt_f64(self.epsilon),
            self.estimator.as_str().to_string(),
            self.function.clone(),
            fmt_f64(self.e),
            fmt_f64(self.s),
            fmt_f64(self.tau),
            fmt_f64(self.ci_low),
            fmt_f64(self.ci_high),
            self.support_count.to_string(),
            fmt_f64(self.acceptance_rate),
            self.flag.clone(),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != RESULT_COLUMNS.len() {
            return Err(anyhow!("expected {} columns, got {}", RESULT_COLUMNS.len(), r.len()));
        }
        let f = |i: usize| -> Result<f64> {
            r[i].parse::<f64>()
                .with_context(|| format!("column {} is not a number: '{}'", RESULT_COLUMNS[i], &r[i]))
        };
        Ok(ResultRow {
            replicate: r[0].parse()?,
            seed: r[1].parse()?,
            delta_final: f(2)?,
            epsilon: f(3)?,
            estimator: EstimatorKind::parse(&r[4])
                .ok_or_else(|| anyhow!("unknown estimator '{}'", &r[4]))?,
            function: r[5].to_string(),
            e: f(6)?,
            s: f(7)?,
            tau: f(8)?,
            ci_low: f(9)?,
            ci_high: f(10)?,
            support_count: r[11].parse()?,
            acceptance_rate: f(12)?,
            flag: r[13].to_string(),
        })
    }
}

/// `{:.16e}`, with `NaN` and `inf`/`-inf` spelled so Rust can parse them back.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULT_COLUMNS)?;
    for row in rows {
        wtr.write_record(row.to_record())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(anyhow!("unexpected header {:?}", header));
    }
    rdr.records()
        .map(|rec| ResultRow::from_record(&rec?))
        .collect()
}

pub fn write_trajectory<W: Write>(w: W, series: &[(u64, Vec<f64>)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRAJECTORY_COLUMNS)?;
    for (rep, deltas) in series {
        for (i, d) in deltas.iter().enumerate() {
            wtr.write_record([rep.to_string(), (i + 1).to_string(), fmt_f64(*d)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let rep: u64 = rec[0].parse()?;
        let d: f64 = rec[2].parse()?;
        match out.last_mut() {
            Some((r, v)) if *r == rep => v.push(d),
            _ => out.push((rep, vec![d])),
        }
    }
    Ok(out)
}
