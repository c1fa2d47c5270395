use rand::Rng;

/// Outcome of one simulation `Y ~ g(. | theta)` reduced to what the sampler keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservation {
    /// `d(Y, y*)`; `f64::INFINITY` for failed or capped simulations.
    pub distance: f64,
    /// Centered summaries `s(Y) - s(y*)`, when the model defines them.
    pub summaries: Option<Vec<f64>>,
}

impl PseudoObservation {
    pub fn failed() -> Self {
        PseudoObservation {
            distance: f64::INFINITY,
            summaries: None,
        }
    }

    /// Builds an observation whose distance is the Euclidean norm of the summaries.
    pub fn from_summaries(summaries: Vec<f64>) -> Self {
        let distance = summaries.iter().map(|s| s * s).sum::<f64>().sqrt();
        PseudoObservation {
            distance,
            summaries: Some(summaries),
        }
    }
}

/// A simulator-based Bayesian model: prior, simulator and distance to the data.
pub trait Model: Send + Sync {
    /// Parameter dimension.
    fn dim(&self) -> usize;

    /// Log prior density up to a constant; `-inf` outside the support.
    fn log_prior(&self, theta: &[f64]) -> f64;

    fn in_support(&self, theta: &[f64]) -> bool {
        self.log_prior(theta) > f64::NEG_INFINITY
    }

    /// Draws pseudo-data at `theta` and returns its distance to the observations.
    fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> PseudoObservation;

    /// Draws a parameter from the prior.
    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64>;
}

impl<M: Model> Model for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        (**self).in_support(theta)
    }

    fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> PseudoObservation {
        (**self).simulate(theta, rng)
    }

    fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (**self).sample_prior(rng)
    }
}
