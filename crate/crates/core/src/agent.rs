//! Tabular Q-learning over latent state ids with ε-greedy exploration.
//!
//! The policy only turns rewards into behavior; every explorer is compared
//! under the same agent.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::Action;
use crate::error::{Error, Result};
use crate::lpm::combined_reward;
use crate::numeric::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Intrinsic weight `β`.
    pub beta: f64,
    /// Q-learning step size `α`.
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps over which ε decays; `None` means a fifth of the run.
    pub epsilon_decay_steps: Option<u64>,
    /// Divide intrinsic rewards by their running standard deviation.
    pub normalize_intrinsic: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            learning_rate: 0.1,
            discount: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: None,
            normalize_intrinsic: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("agent.{m}")));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon bounds must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn schedule(&self, total_steps: u64) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: self.epsilon_decay_steps.unwrap_or(total_steps / 5),
        }
    }
}

/// Linear decay from `start` to `end` over `decay_steps`, constant after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            decay_steps: 0,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Action values per `(state, action)`; unseen pairs read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    state_count: usize,
    action_count: usize,
    values: Vec<f64>,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: f64,
}

impl QTable {
    pub fn new(state_count: usize, action_count: usize, learning_rate: f64, discount: f64) -> Result<Self> {
        if state_count == 0 || action_count == 0 {
            return Err(Error::InvalidConfig("q-table needs states and actions".into()));
        }
        Ok(Self {
            state_count,
            action_count,
            values: vec![0.0; state_count * action_count],
            learning_rate,
            discount,
            epsilon: 1.0,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.state_count {
            return Err(Error::InvalidConfig(format!(
                "state id {s} outside {} states",
                self.state_count
            )));
        }
        Ok(())
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.action_count..(s + 1) * self.action_count]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.action_count..(s + 1) * self.action_count]
    }

    pub fn get(&self, s: usize, a: Action) -> f64 {
        self.row(s)[a.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, s: usize) -> Action {
        let row = self.row(s);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        Action::new(best, self.action_count).expect("in range")
    }

    pub fn select_action(&self, s: usize, rng: &mut Rng) -> Result<Action> {
        self.check_state(s)?;
        if rng.random::<f64>() < self.epsilon {
            Action::new(rng.random_range(0..self.action_count), self.action_count)
        } else {
            Ok(self.greedy(s))
        }
    }

    /// `Q(s,a) += α (r + γ max Q(s',·) (1 − done) − Q(s,a))`.
    pub fn q_update(&mut self, s: usize, a: Action, reward: f64, s_next: usize, done: bool) -> Result<()> {
        self.check_state(s)?;
        self.check_state(s_next)?;
        if a.index() >= self.action_count {
            return Err(Error::InvalidAction {
                index: a.index(),
                count: self.action_count,
            });
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite(format!("q_update reward {reward}")));
        }
        let bootstrap = if done {
            0.0
        } else {
            self.row(s_next).iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let target = reward + self.discount * bootstrap;
        let alpha = self.learning_rate;
        let q = &mut self.row_mut(s)[a.index()];
        *q += alpha * (target - *q);
        Ok(())
    }
}

/// Welford running variance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStd {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStd {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            1.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

/// Q-table plus ε schedule and the reward combination.
#[derive(Debug, Clone)]
pub struct Agent {
    pub q: QTable,
    schedule: EpsilonSchedule,
    beta: f64,
    normalizer: Option<RunningStd>,
    steps: u64,
}

impl Agent {
    pub fn new(config: &AgentConfig, state_count: usize, action_count: usize, total_steps: u64) -> Result<Self> {
        config.validate()?;
        let mut q = QTable::new(state_count, action_count, config.learning_rate, config.discount)?;
        let schedule = config.schedule(total_steps);
        q.epsilon = schedule.value(0);
        Ok(Self {
            q,
            schedule,
            beta: config.beta,
            normalizer: config.normalize_intrinsic.then(RunningStd::default),
            steps: 0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.q.epsilon
    }

    pub fn act(&mut self, state: usize, rng: &mut Rng) -> Result<Action> {
        self.q.epsilon = self.schedule.value(self.steps);
        self.q.select_action(state, rng)
    }

    /// Combines the rewards, applies the update and advances the schedule.
    /// Returns the combined reward.
    pub fn learn(
        &mut self,
        s: usize,
        a: Action,
        extrinsic: f64,
        intrinsic: f64,
        s_next: usize,
        done: bool,
    ) -> Result<f64> {
        let intrinsic = match &mut self.normalizer {
            Some(n) => {
                n.push(intrinsic);
                let std = n.std();
                if std > 1e-8 {
                    intrinsic / std
                } else {
                    intrinsic
                }
            }
            None => intrinsic,
        };
        let r = combined_reward(extrinsic, intrinsic, self.beta);
        self.q.q_update(s, a, r, s_next, done)?;
        self.steps += 1;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;

    fn table() -> QTable {
        QTable::new(3, 4, 0.5, 0.0).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let mut q = table();
        q.epsilon = 0.0;
        let mut rng = seeded(0);
        assert_eq!(q.select_action(0, &mut rng).unwrap().index(), 0);
        q.row_mut(1).copy_from_slice(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(q.select_action(1, &mut rng).unwrap().index(), 1);
        assert!(q.select_action(3, &mut rng).is_err());
    }

    #[test]
    fn uniform_when_fully_random() {
        let q = table();
        let mut rng = seeded(5);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[q.select_action(0, &mut rng).unwrap().index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn update_examples() {
        let mut q = table();
        let a = Action::new(2, 4).unwrap();
        q.q_update(0, a, 2.0, 1, false).unwrap();
        assert_eq!(q.get(0, a), 1.0);

        let mut q = QTable::new(2, 2, 1.0, 0.9).unwrap();
        q.row_mut(1).copy_from_slice(&[5.0, 7.0]);
        let a = Action::new(0, 2).unwrap();
        q.q_update(0, a, 1.0, 1, true).unwrap();
        assert_eq!(q.get(0, a), 1.0);
        q.q_update(0, a, 1.0, 1, false).unwrap();
        assert!((q.get(0, a) - 7.3).abs() < 1e-12);
    }

    #[test]
    fn non_finite_reward_rejected() {
        let mut q = table();
        let a = Action::new(0, 4).unwrap();
        assert!(q.q_update(0, a, f64::NAN, 1, false).is_err());
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn schedule_is_linear_then_flat() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.05,
            decay_steps: 100,
        };
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(50) - 0.525).abs() < 1e-12);
        assert_eq!(s.value(100), 0.05);
        assert_eq!(s.value(10_000), 0.05);
        assert_eq!(AgentConfig::default().schedule(1000).decay_steps, 200);
    }

    #[test]
    fn zero_beta_keeps_table_zero() {
        let cfg = AgentConfig {
            beta: 0.0,
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(&cfg, 5, 3, 1000).unwrap();
        let mut rng = seeded(1);
        let mut s = 0;
        for _ in 0..1000 {
            let a = agent.act(s, &mut rng).unwrap();
            let next = (s + a.index() + 1) % 5;
            agent.learn(s, a, 0.0, 3.7, next, false).unwrap();
            s = next;
        }
        assert!(agent.q.values().iter().all(|&v| v == 0.0));
    }
}
