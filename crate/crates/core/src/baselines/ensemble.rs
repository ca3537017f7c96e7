use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{layer_sizes, BaselineConfig};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::explorer::{check_dims, Explorer, UpdateSchedule};
use crate::lpm::{Transition, TransitionBuffer};
use crate::numeric::rng::{stream, Rng};
use crate::numeric::train::Trainable;
use crate::numeric::{encode_state_action, Mlp, RealVector};

/// Mean over output dimensions of the across-member population variance.
pub fn population_variance_mean(predictions: &[RealVector]) -> Result<f64> {
    let k = predictions.len();
    if k < 2 {
        return Err(Error::InvalidConfig("variance needs at least two members".into()));
    }
    let dim = predictions[0].dim();
    if let Some(p) = predictions.iter().find(|p| p.dim() != dim) {
        return Err(Error::dims("ensemble predictions", dim, p.dim()));
    }
    let mut total = 0.0;
    for j in 0..dim {
        let mean = predictions.iter().map(|p| p[j]).sum::<f64>() / k as f64;
        total += predictions.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / k as f64;
    }
    Ok(total / dim as f64)
}

/// Disagreement of independently initialised dynamics models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleExplorer {
    obs_dim: usize,
    action_count: usize,
    config: BaselineConfig,
    members: Vec<Trainable>,
    buffer: TransitionBuffer,
    schedule: UpdateSchedule,
    rng: Rng,
}

impl EnsembleExplorer {
    pub fn new(obs_dim: usize, action_count: usize, config: BaselineConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let sizes = layer_sizes(obs_dim + action_count, &config.dynamics_hidden, obs_dim);
        let mut init = stream(seed, 0x454e_5300);
        let members = (0..config.ensemble_size)
            .map(|_| Mlp::new(&sizes, config.hidden_activation, config.dynamics_output, &mut init))
            .collect::<Result<Vec<_>>>()?;
        Self::with_members(obs_dim, action_count, config, members, seed)
    }

    pub fn with_members(
        obs_dim: usize,
        action_count: usize,
        config: BaselineConfig,
        members: Vec<Mlp>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if members.len() < 2 {
            return Err(Error::InvalidConfig("ensemble needs at least two members".into()));
        }
        for m in &members {
            if m.input_dim() != obs_dim + action_count || m.output_dim() != obs_dim {
                return Err(Error::dims("ensemble member", obs_dim + action_count, m.input_dim()));
            }
        }
        let adam = config.adam();
        Ok(Self {
            obs_dim,
            action_count,
            members: members.into_iter().map(|m| Trainable::new(m, adam)).collect(),
            buffer: TransitionBuffer::new(config.buffer_capacity)?,
            schedule: UpdateSchedule::new(config.update_cycle)?,
            rng: stream(seed, 0x454e_5301),
            config,
        })
    }

    pub fn members(&self) -> impl Iterator<Item = &Mlp> {
        self.members.iter().map(|m| &m.model)
    }

    pub fn predictions(&self, obs: &RealVector, action: Action) -> Result<Vec<RealVector>> {
        let x = encode_state_action(obs, action.index(), self.action_count);
        self.members.iter().map(|m| m.model.forward(&x)).collect()
    }
}

impl Explorer for EnsembleExplorer {
    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        check_dims("ensemble_observe", self.obs_dim, self.action_count, obs, action, next_obs)?;
        let reward = population_variance_mean(&self.predictions(obs, action)?)?;
        self.buffer.push(Transition {
            obs: obs.clone(),
            action,
            next_obs: next_obs.clone(),
        });
        Ok(reward)
    }

    fn update(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        for _ in 0..self.config.epochs_per_update {
            let (x, y) = self
                .buffer
                .sample_batch(&mut self.rng, self.config.batch_size, self.action_count);
            let (x, y): (ArrayView2<f64>, ArrayView2<f64>) = (x.view(), y.view());
            for m in &mut self.members {
                m.regression_step(x, y)?;
            }
        }
        Ok(())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}
