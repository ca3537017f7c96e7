use serde::{Deserialize, Serialize};

use super::{layer_sizes, BaselineConfig};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::explorer::{check_dims, Explorer, UpdateSchedule};
use crate::lpm::{Transition, TransitionBuffer};
use crate::numeric::rng::{stream, Rng};
use crate::numeric::train::Trainable;
use crate::numeric::{encode_state_action, mse, Mlp, RealVector};

/// Prediction-error curiosity in observation space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeCuriosity {
    obs_dim: usize,
    action_count: usize,
    config: BaselineConfig,
    dynamics: Trainable,
    buffer: TransitionBuffer,
    schedule: UpdateSchedule,
    rng: Rng,
}

impl PeCuriosity {
    pub fn new(obs_dim: usize, action_count: usize, config: BaselineConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream(seed, 0x5045_0000);
        let model = Mlp::new(
            &layer_sizes(obs_dim + action_count, &config.dynamics_hidden, obs_dim),
            config.hidden_activation,
            config.dynamics_output,
            &mut init,
        )?;
        Self::with_model(obs_dim, action_count, config, model, seed)
    }

    pub fn with_model(
        obs_dim: usize,
        action_count: usize,
        config: BaselineConfig,
        model: Mlp,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if model.input_dim() != obs_dim + action_count || model.output_dim() != obs_dim {
            return Err(Error::dims("pe dynamics model", obs_dim + action_count, model.input_dim()));
        }
        Ok(Self {
            obs_dim,
            action_count,
            dynamics: Trainable::new(model, config.adam()),
            buffer: TransitionBuffer::new(config.buffer_capacity)?,
            schedule: UpdateSchedule::new(config.update_cycle)?,
            rng: stream(seed, 0x5045_0001),
            config,
        })
    }

    pub fn model(&self) -> &Mlp {
        &self.dynamics.model
    }

    pub fn buffer(&self) -> &TransitionBuffer {
        &self.buffer
    }
}

impl Explorer for PeCuriosity {
    fn name(&self) -> &'static str {
        "pe"
    }

    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        check_dims("pe_observe", self.obs_dim, self.action_count, obs, action, next_obs)?;
        let x = encode_state_action(obs, action.index(), self.action_count);
        let pred = self.dynamics.model.forward(&x)?;
        let reward = mse(next_obs, &pred)?;
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
            self.dynamics.regression_step(x.view(), y.view())?;
        }
        Ok(())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}
