use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{layer_sizes, BaselineConfig};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::explorer::{check_dims, Explorer, UpdateSchedule};
use crate::lpm::{Transition, TransitionBuffer};
use crate::numeric::rng::{stream, Rng};
use crate::numeric::train::Trainable;
use crate::numeric::{encode_state_action, mse, Activation, Mlp, RealVector};

/// Bound on the log-variance head before exponentiation.
const LOG_VARIANCE_LIMIT: f64 = 30.0;

/// Aleatoric mapping agent: one network with a mean head `μ(o, a)` (the first
/// `dim` outputs) and a scalar log-variance head (the last output), trained by
/// Gaussian negative log-likelihood so that `Σ = exp(head)` absorbs the
/// irreducible part of the error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmaExplorer {
    obs_dim: usize,
    action_count: usize,
    config: BaselineConfig,
    model: Trainable,
    buffer: TransitionBuffer,
    schedule: UpdateSchedule,
    rng: Rng,
}

impl AmaExplorer {
    pub fn new(obs_dim: usize, action_count: usize, config: BaselineConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream(seed, 0x414d_4100);
        let model = Mlp::new(
            &layer_sizes(obs_dim + action_count, &config.dynamics_hidden, obs_dim + 1),
            config.hidden_activation,
            Activation::Identity,
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
        if model.input_dim() != obs_dim + action_count || model.output_dim() != obs_dim + 1 {
            return Err(Error::dims("ama model", obs_dim + 1, model.output_dim()));
        }
        if model.output_activation() != Activation::Identity {
            return Err(Error::InvalidConfig("ama heads need an identity output".into()));
        }
        Ok(Self {
            obs_dim,
            action_count,
            model: Trainable::new(model, config.adam()),
            buffer: TransitionBuffer::new(config.buffer_capacity)?,
            schedule: UpdateSchedule::new(config.update_cycle)?,
            rng: stream(seed, 0x414d_4101),
            config,
        })
    }

    pub fn model(&self) -> &Mlp {
        &self.model.model
    }

    pub fn model_mut(&mut self) -> &mut Mlp {
        &mut self.model.model
    }

    /// The mean head alone, as a standalone dynamics model.
    pub fn mean_head(&self) -> Mlp {
        let m = &self.model.model;
        let last = m.layer_count() - 1;
        let mut sizes = m.layer_sizes().to_vec();
        *sizes.last_mut().unwrap() = self.obs_dim;
        let mut params = Vec::with_capacity(m.param_count());
        for l in 0..m.layer_count() {
            if l == last {
                let w = m.weights(l);
                params.extend(w.slice(s![..self.obs_dim, ..]).iter());
                params.extend(m.bias(l).slice(s![..self.obs_dim]).iter());
            } else {
                params.extend(m.weights(l).iter());
                params.extend(m.bias(l).iter());
            }
        }
        Mlp::from_params(&sizes, m.hidden_activation(), Activation::Identity, params)
            .expect("mean head inherits a valid topology")
    }

    /// `(μ(o, a), Σ(o, a))`.
    pub fn heads(&self, obs: &RealVector, action: Action) -> Result<(Vec<f64>, f64)> {
        let x = encode_state_action(obs, action.index(), self.action_count);
        let out = self.model.model.forward(&x)?;
        let log_var = out[self.obs_dim].clamp(-LOG_VARIANCE_LIMIT, LOG_VARIANCE_LIMIT);
        Ok((out[..self.obs_dim].to_vec(), log_var.exp()))
    }

    fn nll_step(&mut self, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
        let trace = self.model.model.forward_trace(x.view())?;
        let out = trace.output();
        let (batch, dim) = (out.nrows(), self.obs_dim);
        let mut grad = Array2::zeros(out.dim());
        let mut loss = 0.0;
        for i in 0..batch {
            let raw = out[[i, dim]];
            let log_var = raw.clamp(-LOG_VARIANCE_LIMIT, LOG_VARIANCE_LIMIT);
            let var = log_var.exp();
            let mut sq = 0.0;
            for j in 0..dim {
                let d = out[[i, j]] - y[[i, j]];
                sq += d * d;
                grad[[i, j]] = d / (batch as f64 * dim as f64 * var);
            }
            let m = sq / dim as f64;
            loss += 0.5 * (m / var + log_var);
            if raw.abs() < LOG_VARIANCE_LIMIT {
                grad[[i, dim]] = 0.5 * (1.0 - m / var) / batch as f64;
            }
        }
        let g = self.model.model.backward_trace(&trace, grad.view())?;
        self.model.apply(&g)?;
        Ok(loss / batch as f64)
    }
}

impl Explorer for AmaExplorer {
    fn name(&self) -> &'static str {
        "ama"
    }

    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        check_dims("ama_observe", self.obs_dim, self.action_count, obs, action, next_obs)?;
        let (mean, var) = self.heads(obs, action)?;
        let reward = mse(next_obs, &mean)? - self.config.ama_lambda * var;
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
            self.nll_step(&x, &y)?;
        }
        Ok(())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}
