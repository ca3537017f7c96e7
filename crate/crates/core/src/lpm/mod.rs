//! Learning-progress intrinsic reward.
//!
//! A dynamics model `f` predicts the next observation from
//! `(observation, action)`; its log error on each transition,
//! `eps = ln(max(floor, mse(next, f(obs, action))))`, is pushed into a fixed-size
//! queue `D` alongside the transition in the replay buffer `B`. An error model
//! `g` is regressed onto the stored errors, so after update `tau` it predicts
//! the expected error of the dynamics model as it was *before* that update.
//! The reward `g(obs, action) - eps` is the improvement of the current model
//! over that expectation: positive while a transition is being learned, zero
//! once it is learned, and zero in expectation on unlearnable (noisy)
//! transitions where `eps` cannot fall.
//!
//! The reward is gated to zero until `D` holds `d` records.

pub mod buffer;
mod checkpoint;
mod monitor;

pub use buffer::{ErrorQueue, ErrorRecord, Transition, TransitionBuffer};
pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use monitor::{LearningProgressMonitor, LpmConfig, LpmSignal, UpdateReport};

/// `r_ext + beta * r_int`.
pub fn combined_reward(extrinsic: f64, intrinsic: f64, beta: f64) -> f64 {
    extrinsic + beta * intrinsic
}
