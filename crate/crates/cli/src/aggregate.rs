//! Replication summaries computed from per-replicate rows only.

use std::collections::BTreeMap;
use std::io::Write;

use abcpost::models::oracle::{gaussian_posterior_oracle, OracleFunction};
use abcpost::models::GaussianToy;
use abcpost::{CutoffKernel, Functional};
use anyhow::Result;

use crate::config::EstimatorKind;
use crate::output::{flag, fmt_f64, ResultRow, AGGREGATE_COLUMNS};

/// Where the reference value of a cell comes from.
#[derive(Debug, Clone)]
pub enum TruthSource {
    /// Quadrature oracle of the Gaussian toy model with the correction cut-off;
    /// functions without an oracle fall back to the pooled mean.
    GaussianOracle { model: GaussianToy, cutoff: CutoffKernel },
    /// Mean of the usable estimates of the same cell over all replicates.
    Pooled,
}

/// One cell of the coverage/RMSE tables.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub estimator: EstimatorKind,
    pub function: String,
    pub epsilon: f64,
    pub truth: f64,
    pub truth_source: &'static str,
    pub n_included: usize,
    pub n_excluded: usize,
    /// Fraction of included intervals containing the truth (NaN when none has an interval).
    pub coverage: f64,
    pub rmse: f64,
    pub mean_estimate: f64,
    pub mean_acceptance_rate: f64,
}

fn oracle_truth(model: &GaussianToy, cutoff: &CutoffKernel, function: &str, eps: f64) -> Option<f64> {
    match function.parse::<Functional>().ok()? {
        Functional::Component(0) => Some(0.0),
        Functional::Abs(0) => {
            gaussian_posterior_oracle(model, OracleFunction::AbsoluteValue, eps, cutoff).ok()
        }
        _ => None,
    }
}

/// Groups rows by (estimator, function, epsilon) and summarizes each group.
///
/// Rows flagged as excluded or without a finite estimate count towards
/// `n_excluded`. Groups are ordered by estimator, function, then epsilon.
pub fn aggregate(rows: &[ResultRow], truth: &TruthSource) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(EstimatorKind, String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.estimator, r.function.clone(), r.epsilon.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<AggregateRow> = groups
        .into_iter()
        .map(|((estimator, function, eps_bits), group)| {
            let epsilon = f64::from_bits(eps_bits);
            let used: Vec<&&ResultRow> = group.iter().filter(|r| r.is_usable()).collect();
            let n = used.len();
            let mean_estimate = used.iter().map(|r| r.e).sum::<f64>() / n as f64;
            let (truth_value, source) = match truth {
                TruthSource::GaussianOracle { model, cutoff } => {
                    match oracle_truth(model, cutoff, &function, epsilon) {
                        Some(t) => (t, "oracle"),
                        None => (mean_estimate, "pooled"),
                    }
                }
                TruthSource::Pooled => (mean_estimate, "pooled"),
            };
            let with_ci: Vec<_> = used
                .iter()
                .filter(|r| r.ci_low.is_finite() && r.ci_high.is_finite())
                .collect();
            let covered = with_ci
                .iter()
                .filter(|r| r.ci_low <= truth_value && truth_value <= r.ci_high)
                .count();
            let coverage = covered as f64 / with_ci.len() as f64;
            let mse = used.iter().map(|r| (r.e - truth_value).powi(2)).sum::<f64>() / n as f64;
            let mean_acceptance_rate = used.iter().map(|r| r.acceptance_rate).sum::<f64>() / n as f64;
            AggregateRow {
                estimator,
                function,
                epsilon,
                truth: truth_value,
                truth_source: source,
                n_included: n,
                n_excluded: group.len() - n,
                coverage,
                rmse: mse.sqrt(),
                mean_estimate,
                mean_acceptance_rate,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.estimator, &a.function)
            .cmp(&(b.estimator, &b.function))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    out
}

/// Number of rows flagged as excluded.
pub fn excluded_count(rows: &[ResultRow]) -> usize {
    rows.iter().filter(|r| r.flag == flag::EXCLUDED).count()
}

pub fn write_aggregate<W: Write>(w: W, table: &[AggregateRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(AGGREGATE_COLUMNS)?;
    for a in table {
        wtr.write_record([
            a.estimator.as_str().to_string(),
            a.function.clone(),
            fmt_f64(a.epsilon),
            fmt_f64(a.truth),
            a.truth_source.to_string(),
            a.n_included.to_string(),
            a.n_excluded.to_string(),
            fmt_f64(a.coverage),
            fmt_f64(a.rmse),
            fmt_f64(a.mean_estimate),
            fmt_f64(a.mean_acceptance_rate),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
