use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::mlp::{Gradient, Mlp};
use crate::error::{Error, Result};

/// A model paired with its optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainable {
    pub model: Mlp,
    pub optimizer: AdamState,
}

impl Trainable {
    pub fn new(model: Mlp, adam: AdamConfig) -> Self {
        let optimizer = AdamState::new(model.param_count(), adam);
        Self { model, optimizer }
    }

    pub fn apply(&mut self, grad: &Gradient) -> Result<()> {
        self.optimizer.step(self.model.params_mut(), grad.values())
    }

    /// One Adam step on the mean squared error over every element of the
    /// batch. Returns the loss measured before the step.
    pub fn regression_step(
        &mut self,
        inputs: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
    ) -> Result<f64> {
        let trace = self.model.forward_trace(inputs)?;
        let pred = trace.output();
        if pred.dim() != targets.dim() {
            return Err(Error::dims("regression targets", pred.len(), targets.len()));
        }
        let scale = 2.0 / pred.len() as f64;
        let diff: Array2<f64> = pred - &targets;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / pred.len() as f64;
        let grad_out = diff.mapv(|d| d * scale);
        let grad = self.model.backward_trace(&trace, grad_out.view())?;
        self.apply(&grad)?;
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;
    use crate::numeric::Activation;
    use ndarray::array;

    #[test]
    fn regression_reduces_loss() {
        let mut rng = seeded(1);
        let model = Mlp::new(&[2, 8, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let mut t = Trainable::new(model, AdamConfig::with_learning_rate(1e-2));
        let x = array![[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]];
        let y = array![[1.0], [1.0], [0.0], [0.0]];
        let first = t.regression_step(x.view(), y.view()).unwrap();
        let mut last = first;
        for _ in 0..500 {
            last = t.regression_step(x.view(), y.view()).unwrap();
        }
        assert!(last < first * 0.2, "{first} -> {last}");
    }
}
