//! Baseline intrinsic-reward producers.
//!
//! | explorer | reward |
//! |---|---|
//! | [`PeCuriosity`] | `‖o' − f(o,a)‖² / dim` |
//! | [`RndExplorer`] | `‖target(o') − predictor(o')‖²` |
//! | [`EnsembleExplorer`] | mean over dims of `Var_i[f_i(o,a)]` |
//! | [`AmaExplorer`] | `‖o' − μ(o,a)‖² / dim − λ Σ(o,a)` |
//!
//! `PeCuriosity` is forward-model curiosity with the identity feature map:
//! errors are measured in observation space rather than in a learned
//! inverse-dynamics embedding.

mod ama;
mod ensemble;
mod pe;
mod rnd;

use serde::{Deserialize, Serialize};

pub use ama::AmaExplorer;
pub use ensemble::{population_variance_mean, EnsembleExplorer};
pub use pe::PeCuriosity;
pub use rnd::RndExplorer;

use crate::error::{Error, Result};
use crate::lpm::LpmConfig;
use crate::numeric::{Activation, AdamConfig};

/// Training settings shared by the baselines. [`BaselineConfig::matching`]
/// copies the budget from an [`LpmConfig`] so every explorer trains on the
/// same number of samples with the same optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub update_cycle: usize,
    pub batch_size: usize,
    pub epochs_per_update: usize,
    pub learning_rate: f64,
    pub buffer_capacity: Option<usize>,
    pub dynamics_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub dynamics_output: Activation,
    pub ensemble_size: usize,
    pub rnd_embedding_dim: usize,
    pub rnd_hidden: Vec<usize>,
    pub ama_lambda: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self::matching(&LpmConfig::default())
    }
}

impl BaselineConfig {
    pub fn matching(lpm: &LpmConfig) -> Self {
        Self {
            update_cycle: lpm.update_cycle,
            batch_size: lpm.batch_size,
            epochs_per_update: lpm.epochs_per_update,
            learning_rate: lpm.learning_rate,
            buffer_capacity: lpm.buffer_capacity,
            dynamics_hidden: lpm.dynamics_hidden.clone(),
            hidden_activation: lpm.hidden_activation,
            dynamics_output: lpm.dynamics_output,
            ensemble_size: 5,
            rnd_embedding_dim: 64,
            rnd_hidden: vec![128, 128],
            ama_lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("update_cycle", self.update_cycle),
            ("batch_size", self.batch_size),
            ("epochs_per_update", self.epochs_per_update),
            ("rnd_embedding_dim", self.rnd_embedding_dim),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("baseline.{name} must be positive")));
            }
        }
        if self.ensemble_size < 2 {
            return Err(Error::InvalidConfig("baseline.ensemble_size must be at least 2".into()));
        }
        if !(self.ama_lambda >= 0.0 && self.ama_lambda.is_finite()) {
            return Err(Error::InvalidConfig("baseline.ama_lambda must be >= 0".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::InvalidConfig("baseline.buffer_capacity must be positive".into()));
        }
        self.adam().validate()
    }

    pub(crate) fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }
}

pub(crate) fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}
