//! Noisy-TV environments.
//!
//! Both environments emit observations in `[0, 1]^dim` together with a latent
//! state id that reflects the true underlying state regardless of any noise
//! injected into the observation.

pub mod digits;
pub mod idx;
pub mod maze;
pub mod paired;
pub mod pgm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::RealVector;

pub use digits::{synthetic_digit_bank, DigitBank, DIGIT_PIXELS, DIGIT_SIDE};
pub use idx::{load_idx, parse_idx};
pub use maze::{GridMazeEnv, MazeAction, MazeConfig};
pub use paired::{Branch, PairedTransitionEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(usize);

impl Action {
    pub fn new(index: usize, action_count: usize) -> Result<Self> {
        if index < action_count {
            Ok(Self(index))
        } else {
            Err(Error::InvalidAction {
                index,
                count: action_count,
            })
        }
    }

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: RealVector,
    pub extrinsic_reward: f64,
    pub done: bool,
    pub latent_state_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    None,
    StateNoise,
    ActionNoise,
}

impl NoiseMode {
    pub const ALL: [NoiseMode; 3] = [NoiseMode::None, NoiseMode::StateNoise, NoiseMode::ActionNoise];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::None => "none",
            NoiseMode::StateNoise => "state_noise",
            NoiseMode::ActionNoise => "action_noise",
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "deterministic" => Ok(NoiseMode::None),
            "state_noise" | "state" => Ok(NoiseMode::StateNoise),
            "action_noise" | "action" => Ok(NoiseMode::ActionNoise),
            other => Err(Error::InvalidConfig(format!("unknown noise mode {other:?}"))),
        }
    }
}

pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Number of distinct latent state ids this environment can emit.
    fn state_count(&self) -> usize;
    fn reset(&mut self, seed: u64) -> StepResult;
    fn step(&mut self, action: Action) -> Result<StepResult>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_range_checked() {
        assert!(Action::new(3, 4).is_ok());
        assert!(matches!(
            Action::new(4, 4),
            Err(Error::InvalidAction { index: 4, count: 4 })
        ));
    }

    #[test]
    fn noise_mode_round_trips_through_str() {
        for m in NoiseMode::ALL {
            assert_eq!(m.as_str().parse::<NoiseMode>().unwrap(), m);
        }
        assert!("loud".parse::<NoiseMode>().is_err());
    }
}
