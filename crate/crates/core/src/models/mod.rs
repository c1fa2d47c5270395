//! Example models.

pub mod gaussian;
pub mod lotka_volterra;
pub mod oracle;

pub use gaussian::GaussianToy;
pub use lotka_volterra::LotkaVolterraModel;
pub use oracle::{gaussian_posterior_oracle, OracleFunction};
