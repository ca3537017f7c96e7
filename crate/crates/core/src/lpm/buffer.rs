use std::collections::VecDeque;

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::env::Action;
use crate::error::{Error, Result};
use crate::numeric::rng::Rng;
use crate::numeric::{encode_state_action, RealVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: RealVector,
    pub action: Action,
    pub next_obs: RealVector,
}

/// Replay buffer of transitions; FIFO eviction once `capacity` is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionBuffer {
    entries: VecDeque<Transition>,
    capacity: Option<usize>,
}

impl TransitionBuffer {
    pub fn new(capacity: Option<usize>) -> Result<Self> {
        if capacity == Some(0) {
            return Err(Error::InvalidConfig("buffer capacity must be positive".into()));
        }
        Ok(Self {
            entries: VecDeque::new(),
            capacity,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if let Some(cap) = self.capacity {
            while self.entries.len() >= cap {
                self.entries.pop_front();
            }
        }
        self.entries.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.entries.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// Up to `n` distinct transitions drawn uniformly, as
    /// `([obs, one_hot(action)], next_obs)` row batches.
    pub fn sample_batch(
        &self,
        rng: &mut Rng,
        n: usize,
        action_count: usize,
    ) -> (Array2<f64>, Array2<f64>) {
        let n = n.min(self.len());
        let obs_dim = self.entries.front().map_or(0, |t| t.obs.dim());
        let mut x = Array2::zeros((n, obs_dim + action_count));
        let mut y = Array2::zeros((n, obs_dim));
        for (row, i) in sample(rng, self.len(), n).iter().enumerate() {
            let t = &self.entries[i];
            let enc = encode_state_action(&t.obs, t.action.index(), action_count);
            x.row_mut(row).assign(&ArrayView1::from(&enc));
            y.row_mut(row).assign(&ArrayView1::from(t.next_obs.as_slice()));
        }
        (x, y)
    }
}

/// One error-queue entry. `tau` is the dynamics-model version that produced
/// `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub obs: RealVector,
    pub action: Action,
    pub error: f64,
    pub tau: u64,
}

/// Fixed-size FIFO of log errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorQueue {
    entries: VecDeque<ErrorRecord>,
    capacity: usize,
}

impl ErrorQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("error queue size must be positive".into()));
        }
        Ok(Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Evicts the oldest record first when full.
    pub fn push(&mut self, record: ErrorRecord) {
        if self.is_full() {
            self.entries.pop_front();
        }
        self.entries.push_back(record);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&ErrorRecord> {
        self.entries.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ErrorRecord> {
        self.entries.iter()
    }
}
