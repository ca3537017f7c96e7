use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{layer_sizes, BaselineConfig};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::explorer::{check_dims, Explorer, UpdateSchedule};
use crate::numeric::rng::{stream, Rng};
use crate::numeric::train::Trainable;
use crate::numeric::{Activation, Mlp, RealVector};

/// Random network distillation: a predictor chases a frozen, randomly
/// initialised target embedding of the next observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RndExplorer {
    obs_dim: usize,
    action_count: usize,
    config: BaselineConfig,
    target: Mlp,
    predictor: Trainable,
    /// Observations queued for predictor training, FIFO-bounded like a replay buffer.
    seen: std::collections::VecDeque<RealVector>,
    schedule: UpdateSchedule,
    rng: Rng,
}

impl RndExplorer {
    pub fn new(obs_dim: usize, action_count: usize, config: BaselineConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let sizes = layer_sizes(obs_dim, &config.rnd_hidden, config.rnd_embedding_dim);
        let mut init = stream(seed, 0x524e_4400);
        let target = Mlp::new(&sizes, Activation::Relu, Activation::Identity, &mut init)?;
        let predictor = Mlp::new(&sizes, Activation::Relu, Activation::Identity, &mut init)?;
        Self::with_networks(obs_dim, action_count, config, target, predictor, seed)
    }

    pub fn with_networks(
        obs_dim: usize,
        action_count: usize,
        config: BaselineConfig,
        target: Mlp,
        predictor: Mlp,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if target.layer_sizes() != predictor.layer_sizes() || target.input_dim() != obs_dim {
            return Err(Error::dims("rnd networks", obs_dim, target.input_dim()));
        }
        Ok(Self {
            obs_dim,
            action_count,
            predictor: Trainable::new(predictor, config.adam()),
            target,
            seen: Default::default(),
            schedule: UpdateSchedule::new(config.update_cycle)?,
            rng: stream(seed, 0x524e_4401),
            config,
        })
    }

    /// Predictor starts as an exact copy of the target.
    pub fn with_predictor_copy(obs_dim: usize, action_count: usize, config: BaselineConfig, seed: u64) -> Result<Self> {
        let base = Self::new(obs_dim, action_count, config.clone(), seed)?;
        let target = base.target.clone();
        Self::with_networks(obs_dim, action_count, config, target.clone(), target, seed)
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn predictor(&self) -> &Mlp {
        &self.predictor.model
    }
}

impl Explorer for RndExplorer {
    fn name(&self) -> &'static str {
        "rnd"
    }

    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        check_dims("rnd_observe", self.obs_dim, self.action_count, obs, action, next_obs)?;
        let t = self.target.forward(next_obs)?;
        let p = self.predictor.model.forward(next_obs)?;
        let reward = t.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if let Some(cap) = self.config.buffer_capacity {
            while self.seen.len() >= cap {
                self.seen.pop_front();
            }
        }
        self.seen.push_back(next_obs.clone());
        Ok(reward)
    }

    fn update(&mut self) -> Result<()> {
        if self.seen.is_empty() {
            return Ok(());
        }
        for _ in 0..self.config.epochs_per_update {
            let n = self.config.batch_size.min(self.seen.len());
            let mut x = Array2::zeros((n, self.obs_dim));
            for (row, i) in sample(&mut self.rng, self.seen.len(), n).iter().enumerate() {
                x.row_mut(row).assign(&ArrayView1::from(self.seen[i].as_slice()));
            }
            let y = self.target.forward_batch(x.view())?;
            // Squared norm summed over the embedding; regression_step averages
            // over elements, which only rescales the gradient.
            self.predictor.regression_step(x.view(), y.view())?;
        }
        Ok(())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}
