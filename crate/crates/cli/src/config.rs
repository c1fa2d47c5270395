//! Run configuration, read from TOML.

use std::path::Path;

use abcpost::adapt::{StepSchedule, ToleranceBounds};
use abcpost::models::lotka_volterra::POSTERIOR_MODE_START;
use abcpost::models::{GaussianToy, LotkaVolterraModel};
use abcpost::{CutoffKernel, Functional};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Simulator and its parameters; `kind` selects the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Gaussian(GaussianToy),
    LotkaVolterra(LotkaVolterraModel),
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        match self {
            ModelConfig::Gaussian(_) => 1,
            ModelConfig::LotkaVolterra(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Post,
    Regression,
    WasteRecycled,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Post => "post",
            EstimatorKind::Regression => "regression",
            EstimatorKind::WasteRecycled => "waste-recycled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "post" => Some(EstimatorKind::Post),
            "regression" => Some(EstimatorKind::Regression),
            "waste-recycled" => Some(EstimatorKind::WasteRecycled),
            _ => None,
        }
    }
}

/// Target tolerances: an explicit list or every distinct distance (`"sweep"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    List(Vec<f64>),
    Keyword(String),
}

impl EpsilonSpec {
    pub fn is_sweep(&self) -> bool {
        matches!(self, EpsilonSpec::Keyword(k) if k == "sweep")
    }
}

/// Starting parameter: `"prior"`, `"mode"` (Lotka-Volterra) or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    Named(String),
    Theta(Vec<f64>),
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::Named("prior".into())
    }
}

/// Random-walk proposal: adaptive Metropolis from the identity, or a fixed
/// isotropic covariance `variance * I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    #[serde(default = "default_true")]
    pub adaptive: bool,
    #[serde(default = "default_variance")]
    pub variance: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            adaptive: true,
            variance: 1.0,
        }
    }
}

/// Tolerance-adaptive burn-in settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptConfig {
    #[serde(default = "default_target")]
    pub target_rate: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
    /// Keep adapting the covariance after burn-in.
    #[serde(default = "default_true")]
    pub adapt_cov_always: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            target_rate: default_target(),
            exponent: default_exponent(),
            scale: default_scale(),
            delta_min: default_delta_min(),
            delta_max: default_delta_max(),
            adapt_cov_always: true,
        }
    }
}

impl AdaptConfig {
    pub fn schedule(&self) -> Result<StepSchedule> {
        Ok(StepSchedule::new(self.exponent, self.scale)?)
    }

    pub fn bounds(&self) -> Result<ToleranceBounds> {
        Ok(ToleranceBounds::new(self.delta_min, self.delta_max)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Cut-off used by the chain: `simple`, `gaussian` or `epanechnikov`.
    pub cutoff: String,
    /// Cut-off of the correction; defaults to `cutoff`.
    #[serde(default)]
    pub post_cutoff: Option<String>,
    pub mode: Mode,
    /// Simulation tolerance in fixed mode.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub adapt: AdaptConfig,
    pub n_burn: usize,
    pub n_keep: usize,
    pub epsilons: EpsilonSpec,
    pub functions: Vec<Functional>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_one")]
    pub reps: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default)]
    pub proposal: ProposalConfig,
    #[serde(default = "default_init_attempts")]
    pub init_attempts: usize,
}

fn default_true() -> bool {
    true
}
fn default_variance() -> f64 {
    1.0
}
fn default_target() -> f64 {
    0.1
}
fn default_exponent() -> f64 {
    2.0 / 3.0
}
fn default_scale() -> f64 {
    1.0
}
fn default_delta_min() -> f64 {
    1e-8
}
fn default_delta_max() -> f64 {
    1e8
}
fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Post]
}
fn default_z() -> f64 {
    abcpost::post::DEFAULT_Z
}
fn default_one() -> u64 {
    1
}
fn default_threads() -> usize {
    1
}
fn default_init_attempts() -> usize {
    abcpost::chain::DEFAULT_INIT_ATTEMPTS
}

fn parse_cutoff(name: &str) -> Result<CutoffKernel> {
    name.parse::<CutoffKernel>()
        .with_context(|| format!("unknown cut-off '{name}'"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn cutoff_kernel(&self) -> Result<CutoffKernel> {
        parse_cutoff(&self.cutoff)
    }

    pub fn post_cutoff_kernel(&self) -> Result<CutoffKernel> {
        parse_cutoff(self.post_cutoff.as_deref().unwrap_or(&self.cutoff))
    }

    pub fn needs_proposals(&self) -> bool {
        self.estimators.contains(&EstimatorKind::WasteRecycled)
    }

    pub fn needs_summaries(&self) -> bool {
        self.estimators.contains(&EstimatorKind::Regression)
    }

    pub fn start_theta(&self) -> Result<Option<Vec<f64>>> {
        match &self.start {
            StartSpec::Theta(t) => Ok(Some(t.clone())),
            StartSpec::Named(n) if n == "prior" => Ok(None),
            StartSpec::Named(n) if n == "mode" => match self.model {
                ModelConfig::LotkaVolterra(_) => Ok(Some(POSTERIOR_MODE_START.to_vec())),
                ModelConfig::Gaussian(_) => Ok(Some(vec![0.0])),
            },
            StartSpec::Named(n) => bail!("unknown start '{n}'; use \"prior\", \"mode\" or a list"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cutoff = self.cutoff_kernel()?;
        let post = self.post_cutoff_kernel()?;
        if self.n_keep == 0 {
            bail!("n_keep must be positive");
        }
        if self.reps == 0 {
            bail!("reps must be positive");
        }
        if self.threads == 0 {
            bail!("threads must be positive");
        }
        if self.init_attempts == 0 {
            bail!("init_attempts must be positive");
        }
        if self.functions.is_empty() {
            bail!("at least one function is required");
        }
        if self.estimators.is_empty() {
            bail!("at least one estimator is required");
        }
        if !(self.z >= 0.0 && self.z.is_finite()) {
            bail!("z must be a nonnegative number");
        }
        let dim = self.model.dim();
        if let Some(f) = self.functions.iter().find(|f| f.component() >= dim) {
            bail!("function {f} refers to a component beyond dimension {dim}");
        }
        if let Some(t) = self.start_theta()? {
            if t.len() != dim {
                bail!("start has {} values, model dimension is {dim}", t.len());
            }
        }
        if !(self.proposal.variance > 0.0 && self.proposal.variance.is_finite()) {
            bail!("proposal variance must be positive");
        }
        match &self.epsilons {
            EpsilonSpec::Keyword(k) if k != "sweep" => {
                bail!("epsilons must be a list or \"sweep\", got \"{k}\"")
            }
            EpsilonSpec::Keyword(_) => {
                if !cutoff.is_simple() || !post.is_simple() {
                    bail!("an epsilon sweep needs the simple cut-off for simulation and correction");
                }
            }
            EpsilonSpec::List(l) => {
                if l.is_empty() {
                    bail!("epsilon list is empty");
                }
                if let Some(e) = l.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
                    bail!("epsilon values must be positive, got {e}");
                }
            }
        }
        match self.mode {
            Mode::Fixed => {
                let Some(delta) = self.delta else {
                    bail!("fixed mode needs delta");
                };
                if !(delta > 0.0 && delta.is_finite()) {
                    bail!("delta must be positive, got {delta}");
                }
                if let EpsilonSpec::List(l) = &self.epsilons {
                    if let Some(e) = l.iter().find(|e| **e > delta) {
                        bail!("epsilon {e} exceeds delta {delta}");
                    }
                }
            }
            Mode::Adaptive => {
                if self.n_burn == 0 {
                    bail!("adaptive mode needs n_burn >= 1 burn-in iterations");
                }
                if !(self.adapt.target_rate > 0.0 && self.adapt.target_rate < 1.0) {
                    bail!("target_rate must lie in (0, 1)");
                }
                self.adapt.schedule()?;
                self.adapt.bounds()?;
            }
        }
        Ok(())
    }
}
