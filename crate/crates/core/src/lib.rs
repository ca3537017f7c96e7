//! Exploration by learning progress.
//!
//! The crate pairs a dynamics model with an error model that predicts the
//! dynamics model's previous log error; the intrinsic reward is the gap
//! between that prediction and the current error, which vanishes on
//! unlearnable (noisy) transitions. Around it sit baseline explorers,
//! noisy-TV environments, an exact information-gain oracle on finite
//! parameter grids, a tabular agent and the experiment harness.

pub mod error;
pub mod agent;
pub mod baselines;
pub mod env;
pub mod explorer;
pub mod harness;
pub mod lpm;
pub mod numeric;
pub mod oracle;

pub use error::{Error, Result};
