//! Flat key-value run configuration.
//!
//! ```toml
//! scenario = "lognormal"
//! estimator = "shifted"
//! epsilons = [0.2, 0.1, 0.05, 0.025]
//! samples = "quadrature"   # or an integer
//! points = [1.0]
//! seed = 7
//! workers = 4
//! out = "bias.csv"
//! strict = true
//! ```
//!
//! Every key is optional; keys present override the matching flags. The
//! environment variable `DIRICHLET_MC_SEED` overrides `seed` from either.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::sweep::SampleSize;
use crate::error::{Error, Result};

pub const SEED_ENV: &str = "DIRICHLET_MC_SEED";

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SamplesValue {
    Count(u64),
    Word(String),
}

impl SamplesValue {
    pub fn to_sample_size(&self) -> Result<SampleSize> {
        match self {
            Self::Count(n) => Ok(SampleSize::MonteCarlo(*n as usize)),
            Self::Word(w) => parse_samples(w),
        }
    }
}

/// `"quadrature"` or a positive integer.
pub fn parse_samples(s: &str) -> Result<SampleSize> {
    if s == "quadrature" {
        return Ok(SampleSize::Quadrature);
    }
    s.parse::<usize>().map(SampleSize::MonteCarlo).map_err(|_| {
        Error::InvalidArgument(format!(
            "samples must be an integer or \"quadrature\", got '{s}'"
        ))
    })
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub estimator: Option<String>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub samples: Option<SamplesValue>,
    pub points: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }
}

/// Seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::InvalidArgument(format!("{SEED_ENV} must be an integer, got '{v}'"))
        }),
        Err(_) => Ok(None),
    }
}
