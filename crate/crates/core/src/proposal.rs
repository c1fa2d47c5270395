//! Symmetric Gaussian random-walk proposal `N(theta, Sigma)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Cholesky-factored random-walk proposal.
#[derive(Debug, Clone)]
pub struct GaussianProposal {
    chol: DMatrix<f64>,
}

impl GaussianProposal {
    /// Factors `cov`; on failure adds `1e-10 * (tr(cov)/n + 1e-12) * I` and retries once.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if n == 0 || cov.ncols() != n {
            return Err(Error::Domain(format!(
                "proposal covariance must be square and non-empty, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if let Some(c) = cov.clone().cholesky() {
            return Ok(GaussianProposal { chol: c.unpack() });
        }
        let jitter = 1e-10 * (cov.trace() / n as f64 + 1e-12);
        let mut reg = cov.clone();
        for i in 0..n {
            reg[(i, i)] += jitter;
        }
        reg.cholesky()
            .map(|c| GaussianProposal { chol: c.unpack() })
            .ok_or(Error::NotPositiveDefinite)
    }

    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        Self::new(&(DMatrix::identity(dim, dim) * variance))
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    /// Lower-triangular factor `L` with `L L^T = Sigma`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.chol * z;
        theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect()
    }
}
