//! Fully connected network with a fixed layer topology.
//!
//! Parameters live in one flat buffer, layer by layer: the row-major
//! `out x in` weight matrix followed by the `out` biases. Optimizers and
//! checkpoints work on that buffer directly.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::rng::Rng;
use super::vector::RealVector;
use crate::error::{Error, Result};

pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Identity,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_RELU_SLOPE * z
                }
            }
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_RELU_SLOPE
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    params: Vec<f64>,
}

/// Per-parameter gradient, laid out exactly like [`Mlp`] parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    layer_sizes: Vec<usize>,
    values: Vec<f64>,
}

/// Intermediate values kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input batch, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace holds the input at least")
    }
}

fn param_count_for(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn layer_offsets(sizes: &[usize], layer: usize) -> (usize, usize, usize) {
    let mut offset = 0;
    for w in sizes.windows(2).take(layer) {
        offset += w[0] * w[1] + w[1];
    }
    let (fan_in, fan_out) = (sizes[layer], sizes[layer + 1]);
    (offset, offset + fan_in * fan_out, offset + fan_in * fan_out + fan_out)
}

impl Mlp {
    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes, hidden_activation, output_activation)?;
        for layer in 0..model.layer_count() {
            let bound = 1.0 / (layer_sizes[layer] as f64).sqrt();
            let (start, _, end) = layer_offsets(layer_sizes, layer);
            for p in &mut model.params[start..end] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        Self::validate_topology(layer_sizes, hidden_activation, output_activation)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden_activation,
            output_activation,
            params: vec![0.0; param_count_for(layer_sizes)],
        })
    }

    pub fn from_params(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        Self::validate_topology(layer_sizes, hidden_activation, output_activation)?;
        let expected = param_count_for(layer_sizes);
        if params.len() != expected {
            return Err(Error::dims("Mlp::from_params", expected, params.len()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("MLP parameters".into()));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden_activation,
            output_activation,
            params,
        })
    }

    fn validate_topology(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
    ) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must list at least two positive widths, got {sizes:?}"
            )));
        }
        if hidden == Activation::Sigmoid {
            return Err(Error::InvalidConfig(
                "hidden activation must be relu, leaky_relu or identity".into(),
            ));
        }
        if !matches!(output, Activation::Identity | Activation::Sigmoid) {
            return Err(Error::InvalidConfig(
                "output activation must be identity or sigmoid".into(),
            ));
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (w, b, _) = layer_offsets(&self.layer_sizes, layer);
        let shape = (self.layer_sizes[layer + 1], self.layer_sizes[layer]);
        ArrayView2::from_shape(shape, &self.params[w..b]).expect("layout matches topology")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (_, b, end) = layer_offsets(&self.layer_sizes, layer);
        ArrayView1::from(&self.params[b..end])
    }

    pub fn weights_mut(&mut self, layer: usize) -> ndarray::ArrayViewMut2<'_, f64> {
        let (w, b, _) = layer_offsets(&self.layer_sizes, layer);
        let shape = (self.layer_sizes[layer + 1], self.layer_sizes[layer]);
        ndarray::ArrayViewMut2::from_shape(shape, &mut self.params[w..b])
            .expect("layout matches topology")
    }

    pub fn bias_mut(&mut self, layer: usize) -> ndarray::ArrayViewMut1<'_, f64> {
        let (_, b, end) = layer_offsets(&self.layer_sizes, layer);
        ndarray::ArrayViewMut1::from(&mut self.params[b..end])
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layer_count() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<RealVector> {
        if input.len() != self.input_dim() {
            return Err(Error::dims("mlp_forward", self.input_dim(), input.len()));
        }
        let batch = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let out = self.forward_batch(batch)?;
        let values = out.into_raw_vec_and_offset().0;
        RealVector::new(values).map_err(|_| Error::NonFinite("mlp_forward output".into()))
    }

    /// Forward pass over a batch laid out one sample per row.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::dims("mlp_forward", self.input_dim(), inputs.ncols()));
        }
        let mut a = inputs.to_owned();
        for layer in 0..self.layer_count() {
            let act = self.activation_for(layer);
            let mut z = a.dot(&self.weights(layer).t());
            z += &self.bias(layer);
            z.mapv_inplace(|v| act.apply(v));
            a = z;
        }
        Ok(a)
    }

    pub fn forward_trace(&self, inputs: ArrayView2<'_, f64>) -> Result<ForwardTrace> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::dims("mlp_forward", self.input_dim(), inputs.ncols()));
        }
        let mut activations = vec![inputs.to_owned()];
        let mut pre_activations = Vec::with_capacity(self.layer_count());
        for layer in 0..self.layer_count() {
            let act = self.activation_for(layer);
            let mut z = activations[layer].dot(&self.weights(layer).t());
            z += &self.bias(layer);
            let a = z.mapv(|v| act.apply(v));
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardTrace {
            activations,
            pre_activations,
        })
    }

    /// Back-propagates `output_grad` (dLoss/dOutput, one row per sample) through
    /// a recorded trace. Gradients are summed over the batch.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace,
        output_grad: ArrayView2<'_, f64>,
    ) -> Result<Gradient> {
        let out = trace.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::dims(
                "mlp_backward",
                out.len(),
                output_grad.len(),
            ));
        }
        let mut grad = Gradient::zeros(&self.layer_sizes);
        let mut delta = output_grad.to_owned();
        for layer in (0..self.layer_count()).rev() {
            let act = self.activation_for(layer);
            let z = &trace.pre_activations[layer];
            let a = &trace.activations[layer + 1];
            ndarray::Zip::from(&mut delta)
                .and(z)
                .and(a)
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            let input = &trace.activations[layer];
            let (w, b, end) = layer_offsets(&self.layer_sizes, layer);
            let dw = delta.t().dot(input);
            for (g, v) in grad.values[w..b].iter_mut().zip(dw.iter()) {
                *g = *v;
            }
            let db = delta.sum_axis(Axis(0));
            for (g, v) in grad.values[b..end].iter_mut().zip(db.iter()) {
                *g = *v;
            }
            if layer > 0 {
                delta = delta.dot(&self.weights(layer));
            }
        }
        Ok(grad)
    }

    /// Gradient of a loss with respect to every parameter, given the loss
    /// gradient at the output for one input. The model is not modified.
    pub fn backward(&self, input: &[f64], loss_grad_at_output: &[f64]) -> Result<Gradient> {
        if input.len() != self.input_dim() {
            return Err(Error::dims("mlp_backward", self.input_dim(), input.len()));
        }
        if loss_grad_at_output.len() != self.output_dim() {
            return Err(Error::dims(
                "mlp_backward",
                self.output_dim(),
                loss_grad_at_output.len(),
            ));
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let g = ArrayView2::from_shape((1, loss_grad_at_output.len()), loss_grad_at_output)
            .expect("row vector");
        let trace = self.forward_trace(x)?;
        self.backward_trace(&trace, g)
    }
}

impl Gradient {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        Self {
            layer_sizes: layer_sizes.to_vec(),
            values: vec![0.0; param_count_for(layer_sizes)],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (w, b, _) = layer_offsets(&self.layer_sizes, layer);
        let shape = (self.layer_sizes[layer + 1], self.layer_sizes[layer]);
        ArrayView2::from_shape(shape, &self.values[w..b]).expect("layout matches topology")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (_, b, end) = layer_offsets(&self.layer_sizes, layer);
        ArrayView1::from(&self.values[b..end])
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Builds the `[observation, one_hot(action)]` input row shared by every
/// action-conditioned model.
pub fn encode_state_action(observation: &[f64], action: usize, action_count: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(observation.len() + action_count);
    x.extend_from_slice(observation);
    x.extend((0..action_count).map(|i| if i == action { 1.0 } else { 0.0 }));
    x
}

/// Stacks rows into a batch matrix.
pub fn stack_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize) -> Array2<f64> {
    let mut data = Vec::new();
    let mut n = 0;
    for r in rows {
        debug_assert_eq!(r.len(), width);
        data.extend_from_slice(r);
        n += 1;
    }
    Array2::from_shape_vec((n, width), data).expect("rows share a width")
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded;

    /// Straight-line recomputation with plain loops.
    fn naive_forward(model: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut a = input.to_vec();
        for l in 0..model.layer_count() {
            let w = model.weights(l);
            let b = model.bias(l);
            let act = if l + 1 == model.layer_count() {
                model.output_activation()
            } else {
                model.hidden_activation()
            };
            let mut next = vec![0.0; w.nrows()];
            for (i, n) in next.iter_mut().enumerate() {
                let mut s = b[i];
                for (j, aj) in a.iter().enumerate() {
                    s += w[[i, j]] * aj;
                }
                *n = act.apply(s);
            }
            a = next;
        }
        a
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = Mlp::zeros(&[5, 4, 3], Activation::Relu, Activation::Identity).unwrap();
        let y = m.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut m = Mlp::zeros(&[3, 3], Activation::Identity, Activation::Identity).unwrap();
        for i in 0..3 {
            m.weights_mut(0)[[i, i]] = 1.0;
        }
        let x = [0.3, -1.2, 4.0];
        assert_eq!(m.forward(&x).unwrap().as_slice(), &x);
    }

    #[test]
    fn forward_matches_naive_loops() {
        let mut rng = seeded(11);
        for &(hidden, output) in &[
            (Activation::Relu, Activation::Identity),
            (Activation::LeakyRelu, Activation::Sigmoid),
            (Activation::Identity, Activation::Identity),
        ] {
            let m = Mlp::new(&[6, 9, 4], hidden, output, &mut rng).unwrap();
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fast = m.forward(&x).unwrap();
            let slow = naive_forward(&m, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_wrong_input_dim() {
        let m = Mlp::zeros(&[3, 2], Activation::Relu, Activation::Identity).unwrap();
        assert!(matches!(
            m.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(m.backward(&[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_topology() {
        assert!(Mlp::zeros(&[3], Activation::Relu, Activation::Identity).is_err());
        assert!(Mlp::zeros(&[3, 0, 1], Activation::Relu, Activation::Identity).is_err());
        assert!(Mlp::zeros(&[3, 1], Activation::Sigmoid, Activation::Identity).is_err());
        assert!(Mlp::zeros(&[3, 1], Activation::Relu, Activation::Relu).is_err());
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let mut rng = seeded(3);
        let m = Mlp::new(&[4, 5, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let g = m.backward(&[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        // loss = 0.5 * |Wx + b - y|^2, so dL/dW = (Wx + b - y) x^T.
        let mut rng = seeded(5);
        let m = Mlp::new(&[3, 2], Activation::Identity, Activation::Identity, &mut rng).unwrap();
        let x = [0.5, -1.0, 2.0];
        let y = [1.0, -1.0];
        let pred = m.forward(&x).unwrap();
        let err: Vec<f64> = pred.iter().zip(&y).map(|(p, t)| p - t).collect();
        let g = m.backward(&x, &err).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((g.weights(0)[[i, j]] - err[i] * x[j]).abs() < 1e-14);
            }
            assert!((g.bias(0)[i] - err[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_leaves_model_untouched() {
        let mut rng = seeded(9);
        let m = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let before = m.clone();
        m.backward(&[1.0, 2.0, 3.0], &[0.5, -0.5]).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn one_hot_encoding() {
        assert_eq!(
            encode_state_action(&[0.5, 0.25], 2, 3),
            vec![0.5, 0.25, 0.0, 0.0, 1.0]
        );
    }
}
