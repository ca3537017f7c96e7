//! Common interface of every intrinsic-reward producer.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{AmaExplorer, BaselineConfig, EnsembleExplorer, PeCuriosity, RndExplorer};
use crate::env::Action;
use crate::lpm::{LearningProgressMonitor, LpmConfig};
use crate::error::{Error, Result};
use crate::numeric::RealVector;

/// Counts environment steps and fires every `cycle` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateSchedule {
    cycle: u64,
    env_steps: u64,
}

impl UpdateSchedule {
    pub fn new(cycle: usize) -> Result<Self> {
        if cycle == 0 {
            return Err(Error::InvalidConfig("update cycle must be positive".into()));
        }
        Ok(Self {
            cycle: cycle as u64,
            env_steps: 0,
        })
    }

    /// Advances one environment step; true when `t mod N == 0`.
    pub fn tick(&mut self) -> bool {
        self.env_steps += 1;
        self.env_steps % self.cycle == 0
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }
}

pub trait Explorer: Send {
    fn name(&self) -> &'static str;

    /// Scores one transition and records it for later training.
    fn observe(&mut self, obs: &RealVector, action: Action, next_obs: &RealVector) -> Result<f64>;

    /// One model-update step, regardless of the schedule.
    fn update(&mut self) -> Result<()>;

    fn schedule_mut(&mut self) -> &mut UpdateSchedule;

    /// Closes an environment step and runs [`Explorer::update`] when the
    /// schedule fires. Returns whether an update ran.
    fn end_step(&mut self) -> Result<bool> {
        if self.schedule_mut().tick() {
            self.update()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Produces no intrinsic reward; stands in for the plain random-policy agent.
#[derive(Debug, Clone)]
pub struct NullExplorer {
    schedule: UpdateSchedule,
}

impl Default for NullExplorer {
    fn default() -> Self {
        Self {
            schedule: UpdateSchedule::new(1).expect("positive"),
        }
    }
}

impl Explorer for NullExplorer {
    fn name(&self) -> &'static str {
        "random"
    }

    fn observe(&mut self, _: &RealVector, _: Action, _: &RealVector) -> Result<f64> {
        Ok(0.0)
    }

    fn update(&mut self) -> Result<()> {
        Ok(())
    }

    fn schedule_mut(&mut self) -> &mut UpdateSchedule {
        &mut self.schedule
    }
}

/// Selectable intrinsic-reward producers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplorerKind {
    Lpm,
    Pe,
    Rnd,
    Ensemble,
    Ama,
    Random,
}

impl ExplorerKind {
    pub const ALL: [ExplorerKind; 6] = [
        ExplorerKind::Lpm,
        ExplorerKind::Pe,
        ExplorerKind::Rnd,
        ExplorerKind::Ensemble,
        ExplorerKind::Ama,
        ExplorerKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExplorerKind::Lpm => "lpm",
            ExplorerKind::Pe => "pe",
            ExplorerKind::Rnd => "rnd",
            ExplorerKind::Ensemble => "ensemble",
            ExplorerKind::Ama => "ama",
            ExplorerKind::Random => "random",
        }
    }
}

impl fmt::Display for ExplorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExplorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown explorer `{s}`")))
    }
}

/// Builds a boxed explorer of the requested kind.
pub fn build_explorer(
    kind: ExplorerKind,
    obs_dim: usize,
    action_count: usize,
    lpm: &LpmConfig,
    baseline: &BaselineConfig,
    seed: u64,
) -> Result<Box<dyn Explorer>> {
    let b = baseline.clone();
    Ok(match kind {
        ExplorerKind::Lpm => Box::new(LearningProgressMonitor::new(obs_dim, action_count, lpm.clone(), seed)?),
        ExplorerKind::Pe => Box::new(PeCuriosity::new(obs_dim, action_count, b, seed)?),
        ExplorerKind::Rnd => Box::new(RndExplorer::new(obs_dim, action_count, b, seed)?),
        ExplorerKind::Ensemble => Box::new(EnsembleExplorer::new(obs_dim, action_count, b, seed)?),
        ExplorerKind::Ama => Box::new(AmaExplorer::new(obs_dim, action_count, b, seed)?),
        ExplorerKind::Random => Box::new(NullExplorer::default()),
    })
}

pub(crate) fn check_dims(
    context: &'static str,
    obs_dim: usize,
    action_count: usize,
    obs: &RealVector,
    action: Action,
    next_obs: &RealVector,
) -> Result<()> {
    if obs.dim() != obs_dim {
        return Err(Error::dims(context, obs_dim, obs.dim()));
    }
    if next_obs.dim() != obs_dim {
        return Err(Error::dims(context, obs_dim, next_obs.dim()));
    }
    if action.index() >= action_count {
        return Err(Error::InvalidAction {
            index: action.index(),
            count: action_count,
        });
    }
    Ok(())
}
