//! Scalar functions `f(theta)` whose posterior expectations are estimated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A test function of the parameter vector.
///
/// Parsed from `theta0`, `abs(theta1)` or `exp(theta2)`; the exponential form
/// maps log-parameterized rates back to the natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Functional {
    Component(usize),
    Abs(usize),
    Exp(usize),
}

impl Functional {
    pub fn apply(&self, theta: &[f64]) -> f64 {
        match *self {
            Functional::Component(i) => theta[i],
            Functional::Abs(i) => theta[i].abs(),
            Functional::Exp(i) => theta[i].exp(),
        }
    }

    pub fn component(&self) -> usize {
        match *self {
            Functional::Component(i) | Functional::Abs(i) | Functional::Exp(i) => i,
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Component(i) => write!(f, "theta{i}"),
            Functional::Abs(i) => write!(f, "abs(theta{i})"),
            Functional::Exp(i) => write!(f, "exp(theta{i})"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Domain(format!("cannot parse function '{s}'"));
        let index = |inner: &str| -> Result<usize, Error> {
            inner
                .trim()
                .strip_prefix("theta")
                .and_then(|n| n.parse().ok())
                .ok_or_else(bad)
        };
        if let Some(inner) = s.strip_prefix("abs(").and_then(|r| r.strip_suffix(')')) {
            Ok(Functional::Abs(index(inner)?))
        } else if let Some(inner) = s.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
            Ok(Functional::Exp(index(inner)?))
        } else {
            Ok(Functional::Component(index(s)?))
        }
    }
}

impl TryFrom<String> for Functional {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Functional> for String {
    fn from(f: Functional) -> String {
        f.to_string()
    }
}
