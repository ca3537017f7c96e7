//! Deterministic/stochastic transition pair over digit images.
//!
//! Visiting the deterministic branch starts from the class-0 anchor and
//! returns that same image. Visiting the stochastic branch starts from the
//! class-1 anchor and returns an image of a uniformly drawn class in 2..=9.
//! The latent state id is the class label of the emitted image.

use std::sync::Arc;

use rand::Rng as _;

use super::digits::{DigitBank, CLASS_COUNT, DIGIT_PIXELS};
use super::{Action, Environment, StepResult};
use crate::error::Result;
use crate::numeric::rng::{seeded, Rng};
use crate::numeric::RealVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Deterministic,
    Stochastic,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Deterministic, Branch::Stochastic];

    pub fn action(self) -> Action {
        Action::new(self as usize, 2).expect("two branch actions")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Deterministic => "deterministic",
            Branch::Stochastic => "stochastic",
        }
    }
}

pub struct PairedTransitionEnv {
    bank: Arc<DigitBank>,
    rng: Rng,
    last: Option<StepResult>,
}

impl PairedTransitionEnv {
    pub fn new(bank: impl Into<Arc<DigitBank>>, seed: u64) -> Self {
        Self {
            bank: bank.into(),
            rng: seeded(seed),
            last: None,
        }
    }

    /// Observation the agent sees before taking the branch's action.
    pub fn anchor(&self, branch: Branch) -> &RealVector {
        match branch {
            Branch::Deterministic => &self.bank.class(0)[0],
            Branch::Stochastic => &self.bank.class(1)[0],
        }
    }

    pub fn bank(&self) -> &DigitBank {
        &self.bank
    }

    pub fn last(&self) -> Option<&StepResult> {
        self.last.as_ref()
    }
}

impl Environment for PairedTransitionEnv {
    fn observation_dim(&self) -> usize {
        DIGIT_PIXELS
    }

    fn action_count(&self) -> usize {
        2
    }

    fn state_count(&self) -> usize {
        CLASS_COUNT
    }

    fn reset(&mut self, seed: u64) -> StepResult {
        self.rng = seeded(seed);
        let result = StepResult {
            observation: self.anchor(Branch::Deterministic).clone(),
            extrinsic_reward: 0.0,
            done: false,
            latent_state_id: 0,
        };
        self.last = Some(result.clone());
        result
    }

    fn step(&mut self, action: Action) -> Result<StepResult> {
        let action = Action::new(action.index(), 2)?;
        let (label, observation) = if action.index() == Branch::Deterministic as usize {
            (0, self.anchor(Branch::Deterministic).clone())
        } else {
            let label = self.rng.random_range(2..CLASS_COUNT);
            let images = self.bank.class(label);
            let pick = self.rng.random_range(0..images.len());
            (label, images[pick].clone())
        };
        let result = StepResult {
            observation,
            extrinsic_reward: 0.0,
            done: false,
            latent_state_id: label,
        };
        self.last = Some(result.clone());
        Ok(result)
    }
}
