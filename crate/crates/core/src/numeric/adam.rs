use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("adam settings out of range: {self:?}")))
        }
    }
}

/// Moment estimates for one parameter buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update. A non-finite gradient rejects the whole
    /// step and leaves both `params` and the state untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n {
            return Err(Error::dims("adam_step params", n, params.len()));
        }
        if grads.len() != n {
            return Err(Error::dims("adam_step grads", n, grads.len()));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient component {i} = {} at adam step {}",
                grads[i],
                self.step_count + 1
            )));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;
    use rand::Rng as _;

    /// Scalar Adam written independently of the vectorised version.
    struct ScalarAdam {
        lr: f64,
        m: f64,
        v: f64,
        t: i32,
    }

    impl ScalarAdam {
        fn step(&mut self, x: f64, g: f64) -> f64 {
            self.t += 1;
            self.m = 0.9 * self.m + 0.1 * g;
            self.v = 0.999 * self.v + 0.001 * g * g;
            let mh = self.m / (1.0 - 0.9f64.powi(self.t));
            let vh = self.v / (1.0 - 0.999f64.powi(self.t));
            x - self.lr * mh / (vh.sqrt() + 1e-8)
        }
    }

    #[test]
    fn zero_gradient_from_fresh_state_is_identity() {
        let mut state = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        state.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_by_hand() {
        // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1, update = lr / (1 + 1e-8).
        let lr = 0.01;
        let mut state = AdamState::new(1, AdamConfig::with_learning_rate(lr));
        let mut p = vec![0.0];
        state.step(&mut p, &[1.0]).unwrap();
        let expected = -lr / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "{}", p[0]);
    }

    #[test]
    fn matches_scalar_oracle_for_ten_steps() {
        let mut rng = seeded(21);
        let mut state = AdamState::new(1, AdamConfig::with_learning_rate(0.05));
        let mut oracle = ScalarAdam {
            lr: 0.05,
            m: 0.0,
            v: 0.0,
            t: 0,
        };
        let mut p = vec![0.7];
        let mut x = 0.7;
        for _ in 0..10 {
            let g: f64 = rng.random_range(-3.0..3.0);
            state.step(&mut p, &[g]).unwrap();
            x = oracle.step(x, g);
            assert!((p[0] - x).abs() < 1e-12);
        }
        assert_eq!(state.step_count(), 10);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut state = AdamState::new(2, AdamConfig::default());
        let mut p = vec![1.0, 1.0];
        let err = state.step(&mut p, &[0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut state = AdamState::new(2, AdamConfig::default());
        let mut p = vec![1.0];
        assert!(state.step(&mut p, &[0.0]).is_err());
    }
}
