//! Cut-off functions mapping a scaled distance `t = d / tolerance` to a
//! kernel weight in `[0, 1]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A non-increasing function `phi: [0, inf] -> [0, 1]`.
///
/// The ABC kernel at tolerance `eps` is `phi(d(y, y*) / eps)`.
#[derive(Clone)]
pub enum CutoffKernel {
    /// `1{t <= 1}`
    Simple,
    /// `exp(-t^2 / 2)`
    Gaussian,
    /// `max(0, 1 - t^2)`
    Epanechnikov,
    /// A user-supplied non-increasing function with values in `[0, 1]`.
    Custom {
        name: String,
        phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl CutoffKernel {
    pub fn custom<F>(name: impl Into<String>, phi: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CutoffKernel::Custom {
            name: name.into(),
            phi: Arc::new(phi),
        }
    }

    /// Kernel value `phi(t)`. Negative `t` is a domain error; `t = inf` maps to 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// `ln phi(t)`, with `-inf` where the kernel vanishes.
    pub fn log_eval(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.log_eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 0.0;
        }
        match self {
            CutoffKernel::Simple => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffKernel::Gaussian => (-0.5 * t * t).exp(),
            CutoffKernel::Epanechnikov => (1.0 - t * t).max(0.0),
            CutoffKernel::Custom { phi, .. } => phi(t).clamp(0.0, 1.0),
        }
    }

    pub(crate) fn log_eval_unchecked(&self, t: f64) -> f64 {
        match self {
            // Exact in log space; avoids underflow for distant pseudo-data.
            CutoffKernel::Gaussian if t.is_finite() => -0.5 * t * t,
            _ => self.eval_unchecked(t).ln(),
        }
    }

    /// Whether the kernel takes only the values 0 and 1.
    pub fn is_simple(&self) -> bool {
        matches!(self, CutoffKernel::Simple)
    }

    pub fn name(&self) -> &str {
        match self {
            CutoffKernel::Simple => "simple",
            CutoffKernel::Gaussian => "gaussian",
            CutoffKernel::Epanechnikov => "epanechnikov",
            CutoffKernel::Custom { name, .. } => name,
        }
    }
}

fn check_arg(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!(
            "cut-off argument must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

impl fmt::Debug for CutoffKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CutoffKernel({})", self.name())
    }
}

impl fmt::Display for CutoffKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for CutoffKernel {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CutoffKernel::Custom { phi: a, .. }, CutoffKernel::Custom { phi: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b),
        }
    }
}

impl FromStr for CutoffKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(CutoffKernel::Simple),
            "gaussian" | "gauss" => Ok(CutoffKernel::Gaussian),
            "epanechnikov" | "epa" => Ok(CutoffKernel::Epanechnikov),
            other => Err(Error::Domain(format!("unknown cut-off '{other}'"))),
        }
    }
}
