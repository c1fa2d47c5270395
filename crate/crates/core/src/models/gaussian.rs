use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{Model, PseudoObservation};

/// One-dimensional toy model: `theta ~ N(0, prior_sd^2)`, `Y ~ N(theta, obs_sd^2)`,
/// observation `y* = 0` and distance `|Y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianToy {
    pub prior_sd: f64,
    pub obs_sd: f64,
}

impl Default for GaussianToy {
    fn default() -> Self {
        GaussianToy {
            prior_sd: 30.0,
            obs_sd: 1.0,
        }
    }
}

impl GaussianToy {
    /// Pseudo-observation for a given standard-normal innovation `z`.
    pub fn observe(&self, theta: f64, z: f64) -> PseudoObservation {
        let y = theta + self.obs_sd * z;
        PseudoObservation {
            distance: y.abs(),
            summaries: Some(vec![y]),
        }
    }
}

impl Model for GaussianToy {
    fn dim(&self) -> usize {
        1
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let z = theta[0] / self.prior_sd;
        -0.5 * z * z
    }

    fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> PseudoObservation {
        self.observe(theta[0], rng.sample(StandardNormal))
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        vec![self.prior_sd * rng.sample::<f64, _>(StandardNormal)]
    }
}
