//! Dense networks, Adam, losses and seeded random streams.

pub mod adam;
pub mod loss;
pub mod mlp;
pub mod rng;
pub mod train;
pub mod vector;

pub use adam::{AdamConfig, AdamState};
pub use loss::{log_mse, mse, DEFAULT_MSE_FLOOR};
pub use mlp::{encode_state_action, stack_rows, Activation, ForwardTrace, Gradient, Mlp};
pub use rng::Rng;
pub use vector::RealVector;
