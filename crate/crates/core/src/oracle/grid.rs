use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior, per-point MSE and likelihood exponent over an abstract set of
/// parameter points indexed `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct ParameterGrid {
    prior: Vec<f64>,
    mse: Vec<f64>,
    c: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    prior: Vec<f64>,
    mse: Vec<f64>,
    c: f64,
}

impl TryFrom<RawGrid> for ParameterGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::new(raw.prior, raw.mse, raw.c)
    }
}

impl ParameterGrid {
    pub fn new(prior: Vec<f64>, mse: Vec<f64>, c: f64) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if prior.len() != mse.len() {
            return Err(Error::InvalidGrid(format!(
                "{} prior entries for {} mse entries",
                prior.len(),
                mse.len()
            )));
        }
        if prior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidGrid("prior entries must be finite and >= 0".into()));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!("prior sums to {total}")));
        }
        if mse.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidGrid("mse entries must be finite and > 0".into()));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidGrid(format!("c must be positive, got {c}")));
        }
        Ok(Self { prior, mse, c })
    }

    /// Likelihood exponent for `n` Gaussian samples with fitted noise scale.
    pub fn c_for_sample_count(n: usize) -> f64 {
        n as f64 / 2.0
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn mse(&self) -> &[f64] {
        &self.mse
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}
