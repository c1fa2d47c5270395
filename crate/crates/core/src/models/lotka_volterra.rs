//! Stochastic Lotka-Volterra reaction network
//!
//! ```text
//! X     -> 2X   rate theta1 * X
//! X + Y -> 2Y   rate theta2 * X * Y
//! Y     -> 0    rate theta3 * Y
//! ```
//!
//! simulated exactly with Gillespie's direct method and observed on a
//! regular time grid. Parameters are the log-rates, with a uniform prior
//! on a box.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, PseudoObservation};

/// Summary vector of the reference data set.
pub const OBSERVED_SUMMARIES: [f64; 5] = [-51.07, 29.0, 304.0, 65.0, 404.0];

/// Rates that generated the reference data.
pub const DATA_GENERATING_RATES: [f64; 3] = [0.5, 0.0025, 0.3];

/// Starting point near the posterior mode, in log-rates.
pub const POSTERIOR_MODE_START: [f64; 3] = [-0.55, -5.77, -1.09];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LotkaVolterraModel {
    /// `(X_0, Y_0)`; not part of the published data, configurable.
    pub initial_counts: (u64, u64),
    pub horizon: f64,
    pub obs_interval: f64,
    pub observed_summaries: [f64; 5],
    /// Each log-rate is uniform on `[lo, hi]`.
    pub log_rate_bounds: (f64, f64),
    pub event_cap: u64,
    pub population_cap: u64,
}

impl Default for LotkaVolterraModel {
    fn default() -> Self {
        LotkaVolterraModel {
            initial_counts: (50, 100),
            horizon: 40.0,
            obs_interval: 5.0,
            observed_summaries: OBSERVED_SUMMARIES,
            log_rate_bounds: (-6.0, 0.0),
            event_cap: 10_000_000,
            population_cap: 1_000_000,
        }
    }
}

/// Counts at the observation times `0, dt, 2 dt, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

/// Why a simulation was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CappedFailure {
    EventCap,
    PopulationCap,
}

impl LotkaVolterraModel {
    pub fn n_obs(&self) -> usize {
        (self.horizon / self.obs_interval).round() as usize + 1
    }
}

/// Exact simulation up to the horizon, recording the state at each grid time
/// as the state after the last event at or before that time.
pub fn gillespie_simulate<R: Rng + ?Sized>(
    rates: &[f64; 3],
    model: &LotkaVolterraModel,
    rng: &mut R,
) -> Result<std::result::Result<Trajectory, CappedFailure>> {
    if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Domain(format!("rates must be positive, got {rates:?}")));
    }
    let n_obs = model.n_obs();
    let mut traj = Trajectory {
        x: Vec::with_capacity(n_obs),
        y: Vec::with_capacity(n_obs),
    };
    let (mut x, mut y) = model.initial_counts;
    traj.x.push(x);
    traj.y.push(y);

    let [r1, r2, r3] = *rates;
    let mut t = 0.0;
    let mut next = 1usize;
    let mut events = 0u64;
    while next < n_obs {
        let (xf, yf) = (x as f64, y as f64);
        let a1 = r1 * xf;
        let a2 = r2 * xf * yf;
        let a3 = r3 * yf;
        let a0 = a1 + a2 + a3;
        if a0 <= 0.0 {
            // absorbing
            t = f64::INFINITY;
        } else {
            t += rng.sample::<f64, _>(Exp1) / a0;
        }
        while next < n_obs && next as f64 * model.obs_interval < t {
            traj.x.push(x);
            traj.y.push(y);
            next += 1;
        }
        if next >= n_obs {
            break;
        }
        events += 1;
        if events > model.event_cap {
            return Ok(Err(CappedFailure::EventCap));
        }
        let u = rng.random::<f64>() * a0;
        if u < a1 {
            x += 1;
        } else if u < a1 + a2 {
            x -= 1;
            y += 1;
        } else {
            y -= 1;
        }
        if x > model.population_cap || y > model.population_cap {
            return Ok(Err(CappedFailure::PopulationCap));
        }
    }
    Ok(Ok(traj))
}

/// Lag-2 sample autocorrelation with the biased convention; 0 for a constant series.
pub fn lag2_autocorrelation(series: &[u64]) -> f64 {
    let n = series.len();
    if n < 3 {
        return 0.0;
    }
    let mean = series.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|&v| v as f64 - mean).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = c.iter().zip(&c[2..]).map(|(a, b)| a * b).sum();
    num / denom
}

/// Nearest-rank quantile: the `ceil(p n)`-th smallest value.
pub fn nearest_rank_quantile(series: &[u64], p: f64) -> f64 {
    let mut sorted = series.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1] as f64
}

/// `(100 * acf_2(X), q10(X), q90(X), q10(Y), q90(Y))`.
pub fn lv_summaries(traj: &Trajectory) -> [f64; 5] {
    [
        100.0 * lag2_autocorrelation(&traj.x),
        nearest_rank_quantile(&traj.x, 0.1),
        nearest_rank_quantile(&traj.x, 0.9),
        nearest_rank_quantile(&traj.y, 0.1),
        nearest_rank_quantile(&traj.y, 0.9),
    ]
}

/// Simulates at log-rates `theta` and compares summaries with the observed ones.
pub fn lv_distance<R: Rng + ?Sized>(
    theta: &[f64],
    model: &LotkaVolterraModel,
    rng: &mut R,
) -> PseudoObservation {
    let rates = [theta[0].exp(), theta[1].exp(), theta[2].exp()];
    match gillespie_simulate(&rates, model, rng) {
        Ok(Ok(traj)) => {
            let s = lv_summaries(&traj);
            PseudoObservation::from_summaries(
                s.iter()
                    .zip(&model.observed_summaries)
                    .map(|(a, b)| a - b)
                    .collect(),
            )
        }
        _ => PseudoObservation::failed(),
    }
}

impl Model for LotkaVolterraModel {
    fn dim(&self) -> usize {
        3
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let (lo, hi) = self.log_rate_bounds;
        if theta.iter().all(|t| (lo..=hi).contains(t)) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> PseudoObservation {
        lv_distance(theta, self, rng)
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.log_rate_bounds;
        (0..3).map(|_| rng.random_range(lo..hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pure_birth_without_predators() {
        let model = LotkaVolterraModel {
            initial_counts: (10, 0),
            horizon: 10.0,
            obs_interval: 5.0 / 4.0,
            ..Default::default()
        };
        let traj = gillespie_simulate(&[0.2, 0.01, 0.3], &model, &mut rng(1))
            .unwrap()
            .unwrap();
        assert_eq!(traj.x.len(), 9);
        assert!(traj.x.windows(2).all(|w| w[0] <= w[1]));
        assert!(traj.y.iter().all(|&v| v == 0));
    }

    #[test]
    fn empty_system_is_absorbing() {
        let model = LotkaVolterraModel {
            initial_counts: (0, 0),
            ..Default::default()
        };
        let traj = gillespie_simulate(&[0.5, 0.0025, 0.3], &model, &mut rng(2))
            .unwrap()
            .unwrap();
        assert_eq!(traj.x, vec![0; 9]);
        assert_eq!(traj.y, vec![0; 9]);
    }

    #[test]
    fn nonpositive_rates_are_rejected() {
        let model = LotkaVolterraModel::default();
        assert!(gillespie_simulate(&[0.5, 0.0, 0.3], &model, &mut rng(3)).is_err());
    }

    #[test]
    fn caps_produce_failures() {
        let model = LotkaVolterraModel {
            population_cap: 1_000,
            ..Default::default()
        };
        // fast prey growth, negligible predation
        let out = gillespie_simulate(&[1.0, 1e-6, 1.0], &model, &mut rng(4)).unwrap();
        assert_eq!(out, Err(CappedFailure::PopulationCap));

        let model = LotkaVolterraModel {
            event_cap: 100,
            ..Default::default()
        };
        let out = gillespie_simulate(&[0.5, 0.0025, 0.3], &model, &mut rng(5)).unwrap();
        assert_eq!(out, Err(CappedFailure::EventCap));

        let obs = lv_distance(&[0.0, -13.0, 0.0], &LotkaVolterraModel {
            population_cap: 1_000,
            ..Default::default()
        }, &mut rng(6));
        assert_eq!(obs.distance, f64::INFINITY);
        assert!(obs.summaries.is_none());
    }

    #[test]
    fn lag2_autocorrelation_of_a_ramp() {
        let x: Vec<u64> = (1..=9).collect();
        let r = lag2_autocorrelation(&x);
        // deviations -4..=4: lag-2 products sum to 21, squares to 60
        assert!((r - 21.0 / 60.0).abs() < 1e-15);
        assert!((100.0 * r - 35.0).abs() < 1e-12);
    }

    #[test]
    fn quantiles_nearest_rank() {
        let v: Vec<u64> = (1..=9).map(|k| 10 * k).collect();
        assert_eq!(nearest_rank_quantile(&v, 0.1), 10.0);
        assert_eq!(nearest_rank_quantile(&v, 0.9), 90.0);
        let shuffled = [50, 10, 90, 30, 70, 20, 60, 40, 80];
        assert_eq!(nearest_rank_quantile(&shuffled, 0.9), 90.0);
    }

    #[test]
    fn constant_series_summaries() {
        let traj = Trajectory {
            x: vec![7; 9],
            y: vec![7; 9],
        };
        assert_eq!(lv_summaries(&traj), [0.0, 7.0, 7.0, 7.0, 7.0]);
    }

    #[test]
    fn distance_zero_at_observed_summaries() {
        let traj = Trajectory {
            x: vec![4, 4, 4, 4, 4, 4, 4, 4, 4],
            y: vec![2, 2, 2, 2, 2, 2, 2, 2, 2],
        };
        let model = LotkaVolterraModel {
            observed_summaries: lv_summaries(&traj),
            ..Default::default()
        };
        let s = lv_summaries(&traj);
        let obs = PseudoObservation::from_summaries(
            s.iter().zip(&model.observed_summaries).map(|(a, b)| a - b).collect(),
        );
        assert_eq!(obs.distance, 0.0);
    }

    #[test]
    fn summaries_are_deterministic() {
        let model = LotkaVolterraModel::default();
        let a = lv_distance(&[-0.69, -6.0, -1.2], &model, &mut rng(9));
        let b = lv_distance(&[-0.69, -6.0, -1.2], &model, &mut rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn prior_box() {
        let model = LotkaVolterraModel::default();
        assert_eq!(model.log_prior(&POSTERIOR_MODE_START), 0.0);
        assert_eq!(model.log_prior(&[0.1, -1.0, -1.0]), f64::NEG_INFINITY);
        let mut r = rng(10);
        for _ in 0..100 {
            assert!(model.in_support(&model.sample_prior(&mut r)));
        }
    }
}
