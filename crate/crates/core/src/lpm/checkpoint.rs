//! Checkpoints are JSON documents:
//!
//! ```text
//! { "format": "lpm-checkpoint", "version": 1, "state": { ... } }
//! ```
//!
//! `state` holds the configuration, both models with their Adam moments, the
//! replay buffer, the error queue, `tau`, the step counter and the RNG state,
//! so a restored monitor continues bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::monitor::LearningProgressMonitor;
use crate::error::{Error, Result};
use crate::numeric::Mlp;

pub const CHECKPOINT_FORMAT: &str = "lpm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'static str,
    version: u32,
    state: &'a LearningProgressMonitor,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    version: u32,
    state: LearningProgressMonitor,
}

fn check_model(model: &Mlp, name: &str) -> Result<()> {
    Mlp::from_params(
        model.layer_sizes(),
        model.hidden_activation(),
        model.output_activation(),
        model.params().to_vec(),
    )
    .map(|_| ())
    .map_err(|e| Error::Checkpoint(format!("{name}: {e}")))
}

impl LearningProgressMonitor {
    pub fn to_checkpoint(&self) -> Result<String> {
        serde_json::to_string(&EnvelopeOut {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            state: self,
        })
        .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let env: EnvelopeIn =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if env.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", env.format)));
        }
        if env.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                env.version
            )));
        }
        let state = env.state;
        state.config().validate()?;
        check_model(state.dynamics_model(), "dynamics model")?;
        check_model(state.error_model(), "error model")?;
        let input = state.obs_dim() + state.action_count();
        if state.dynamics_model().input_dim() != input
            || state.dynamics_model().output_dim() != state.obs_dim()
            || state.error_model().input_dim() != input
            || state.error_model().output_dim() != 1
        {
            return Err(Error::Checkpoint("model shapes disagree with dimensions".into()));
        }
        if state.queue().len() > state.queue().capacity() {
            return Err(Error::Checkpoint("error queue exceeds its capacity".into()));
        }
        Ok(state)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint()?).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}
