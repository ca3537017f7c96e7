use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::buffer::{ErrorQueue, ErrorRecord, Transition, TransitionBuffer};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::explorer::{check_dims, Explorer, UpdateSchedule};
use crate::numeric::rng::{stream, Rng};
use crate::numeric::train::Trainable;
use crate::numeric::{
    encode_state_action, log_mse, Activation, AdamConfig, Mlp, RealVector, DEFAULT_MSE_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpmConfig {
    /// Environment steps between model updates (`N`).
    pub update_cycle: usize,
    /// Error queue size (`d`).
    pub queue_size: usize,
    pub batch_size: usize,
    pub epochs_per_update: usize,
    pub learning_rate: f64,
    pub mse_floor: f64,
    /// Replay buffer capacity; `None` keeps every transition.
    pub buffer_capacity: Option<usize>,
    pub dynamics_hidden: Vec<usize>,
    pub error_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub dynamics_output: Activation,
}

impl Default for LpmConfig {
    fn default() -> Self {
        Self {
            update_cycle: 1,
            queue_size: 100,
            batch_size: 32,
            epochs_per_update: 1,
            learning_rate: 1e-3,
            mse_floor: DEFAULT_MSE_FLOOR,
            buffer_capacity: Some(10_000),
            dynamics_hidden: vec![128],
            error_hidden: vec![64, 32],
            hidden_activation: Activation::Relu,
            dynamics_output: Activation::Identity,
        }
    }
}

impl LpmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("update_cycle", self.update_cycle),
            ("queue_size", self.queue_size),
            ("batch_size", self.batch_size),
            ("epochs_per_update", self.epochs_per_update),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("lpm.{name} must be positive")));
            }
        }
        if !(self.mse_floor > 0.0 && self.mse_floor.is_finite()) {
            return Err(Error::InvalidConfig("lpm.mse_floor must be positive".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::InvalidConfig("lpm.buffer_capacity must be positive".into()));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }
}

/// Everything computed while scoring one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpmSignal {
    pub reward: f64,
    /// Log error of the current dynamics model on this transition.
    pub error: f64,
    /// Error model output for the transition's `(obs, action)`.
    pub expected_error: f64,
    /// Whether the queue was full before this transition was pushed.
    pub gated_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    /// Model version after the update.
    pub tau: u64,
    pub skipped: bool,
    pub error_model_loss: Option<f64>,
    pub dynamics_loss: Option<f64>,
    /// Dynamics-model versions spanned by the records the error model was fit on.
    pub record_tau_range: Option<(u64, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningProgressMonitor {
    config: LpmConfig,
    obs_dim: usize,
    action_count: usize,
    dynamics: Trainable,
    error_model: Trainable,
    buffer: TransitionBuffer,
    queue: ErrorQueue,
    tau: u64,
    schedule: UpdateSchedule,
    rng: Rng,
    last_report: Option<UpdateReport>,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(input);
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl LearningProgressMonitor {
    pub fn new(obs_dim: usize, action_count: usize, config: LpmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if obs_dim == 0 || action_count == 0 {
            return Err(Error::InvalidConfig(
                "observation dim and action count must be positive".into(),
            ));
        }
        let input = obs_dim + action_count;
        let mut init = stream(seed, 0x4c50_4d00);
        let dynamics = Mlp::new(
            &sizes(input, &config.dynamics_hidden, obs_dim),
            config.hidden_activation,
            config.dynamics_output,
            &mut init,
        )?;
        let error_model = Mlp::new(
            &sizes(input, &config.error_hidden, 1),
            config.hidden_activation,
            Activation::Identity,
            &mut init,
        )?;
        Self::from_models(obs_dim, action_count, config, dynamics, error_model, seed)
    }

    /// Builds a monitor around caller-supplied models.
    pub fn from_models(
        obs_dim: usize,
        action_count: usize,
        config: LpmConfig,
        dynamics: Mlp,
        error_model: Mlp,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let input = obs_dim + action_count;
        if dynamics.input_dim() != input || dynamics.output_dim() != obs_dim {
            return Err(Error::dims("dynamics model shape", input, dynamics.input_dim()));
        }
        if error_model.input_dim() != input || error_model.output_dim() != 1 {
            return Err(Error::dims("error model shape", input, error_model.input_dim()));
        }
        let adam = AdamConfig::with_learning_rate(config.learning_rate);
        Ok(Self {
            obs_dim,
            action_count,
            dynamics: Trainable::new(dynamics, adam),
            error_model: Trainable::new(error_model, adam),
            buffer: TransitionBuffer::new(config.buffer_capacity)?,
            queue: ErrorQueue::new(config.queue_size)?,
            tau: 0,
            schedule: UpdateSchedule::new(config.update_cycle)?,
            rng: stream(seed, 0x4c50_4d01),
            last_report: None,
            config,
        })
    }

    pub fn config(&self) -> &LpmConfig {
        &self.config
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn env_steps(&self) -> u64 {
        self.schedule.env_steps()
    }

    pub fn buffer(&self) -> &TransitionBuffer {
        &self.buffer
    }

    pub fn queue(&self) -> &ErrorQueue {
        &self.queue
    }

    pub fn dynamics_model(&self) -> &Mlp {
        &self.dynamics.model
    }

    pub fn error_model(&self) -> &Mlp {
        &self.error_model.model
    }

    pub fn dynamics_model_mut(&mut self) -> &mut Mlp {
        &mut self.dynamics.model
    }

    pub fn error_model_mut(&mut self) -> &mut Mlp {
        &mut self.error_model.model
    }

    pub fn last_report(&self) -> Option<&UpdateReport> {
        self.last_report.as_ref()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Log error of the current dynamics model on one transition.
    pub fn prediction_error(&self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        check_dims("lpm_observe", self.obs_dim, self.action_count, obs, action, next_obs)?;
        let x = encode_state_action(obs, action.index(), self.action_count);
        let pred = self.dynamics.model.forward(&x)?;
        log_mse(next_obs, &pred, self.config.mse_floor)
    }

    /// Error model output for `(obs, action)`.
    pub fn expected_error(&self, obs: &RealVector, action: Action) -> Result<f64> {
        if obs.dim() != self.obs_dim {
            return Err(Error::dims("lpm expected_error", self.obs_dim, obs.dim()));
        }
        let x = encode_state_action(obs, Action::new(action.index(), self.action_count)?.index(), self.action_count);
        Ok(self.error_model.model.forward(&x)?[0])
    }

    /// Scores a transition, records it in both buffers and returns the
    /// reward together with its parts.
    pub fn observe_signal(
        &mut self,
        obs: &RealVector,
        action: Action,
        next_obs: &RealVector,
    ) -> Result<LpmSignal> {
        let error = self.prediction_error(obs, action, next_obs)?;
        let expected_error = self.expected_error(obs, action)?;
        let gated_open = self.queue.is_full();
        self.buffer.push(Transition {
            obs: obs.clone(),
            action,
            next_obs: next_obs.clone(),
        });
        self.queue.push(ErrorRecord {
            obs: obs.clone(),
            action,
            error,
            tau: self.tau,
        });
        let reward = if gated_open { expected_error - error } else { 0.0 };
        Ok(LpmSignal {
            reward,
            error,
            expected_error,
            gated_open,
        })
    }

    fn encode(&self, obs: &RealVector, action: Action) -> Vec<f64> {
        encode_state_action(obs, action.index(), self.action_count)
    }

    /// Fits `g` on the queued errors, then `f` on replayed transitions.
    ///
    /// The queued errors were all produced by dynamics models up to the
    /// version before this update, and `g` is fit before `f` moves.
    fn train(&mut self) -> Result<UpdateReport> {
        let input = self.obs_dim + self.action_count;
        let mut report = UpdateReport {
            tau: self.tau,
            skipped: self.queue.is_empty() && self.buffer.is_empty(),
            error_model_loss: None,
            dynamics_loss: None,
            record_tau_range: None,
        };
        if !self.queue.is_empty() {
            let lo = self.queue.iter().map(|r| r.tau).min().unwrap();
            let hi = self.queue.iter().map(|r| r.tau).max().unwrap();
            debug_assert!(hi < self.tau, "queued errors must predate this update");
            report.record_tau_range = Some((lo, hi));
            let mut order: Vec<usize> = (0..self.queue.len()).collect();
            let mut total = 0.0;
            let mut batches = 0;
            for _ in 0..self.config.epochs_per_update {
                order.shuffle(&mut self.rng);
                for chunk in order.chunks(self.config.batch_size) {
                    let mut x = Array2::zeros((chunk.len(), input));
                    let mut y = Array2::zeros((chunk.len(), 1));
                    for (row, &i) in chunk.iter().enumerate() {
                        let r = self.queue.get(i).expect("index in range");
                        let enc = self.encode(&r.obs, r.action);
                        x.row_mut(row).assign(&ndarray::ArrayView1::from(&enc));
                        y[[row, 0]] = r.error;
                    }
                    total += self.error_model.regression_step(x.view(), y.view())?;
                    batches += 1;
                }
            }
            report.error_model_loss = Some(total / batches as f64);
        }
        if !self.buffer.is_empty() {
            let mut total = 0.0;
            for _ in 0..self.config.epochs_per_update {
                let (x, y) =
                    self.buffer
                        .sample_batch(&mut self.rng, self.config.batch_size, self.action_count);
                total += self.dynamics.regression_step(x.view(), y.view())?;
            }
            report.dynamics_loss = Some(total / self.config.epochs_per_update as f64);
        }
        Ok(report)
    }

    /// Advances `tau` and trains both models. Empty buffers skip training but
    /// still advance `tau`.
    pub fn update_models(&mut self) -> Result<&UpdateReport> {
        self.tau += 1;
        let report = self.train()?;
        if report.skipped {
            log::debug!("lpm update {} skipped: buffers empty", self.tau);
        }
        self.last_report = Some(report);
        Ok(self.last_report.as_ref().unwrap())
    }
}

impl Explorer for LearningProgressMonitor {
    fn name(&self) -> &'static str {
        "lpm"
    }

    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64> {
        Ok(self.observe_signal(obs, action, next_obs)?.reward)
    }

    fn update(&mut self) -> Result<()> {
        self.update_models().map(|_| ())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}
