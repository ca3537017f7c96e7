use lpm_explore::numeric::rng::stream;
use lpm_explore::numeric::{Activation, Mlp};
use rand::Rng as _;

pub const GRADIENT_TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-6;

fn weighted_output(model: &Mlp, x: &[f64], w: &[f64]) -> f64 {
    let out = model.forward(x).unwrap();
    out.iter().zip(w).map(|(o, w)| o * w).sum()
}

/// Largest relative gap between the analytic gradient and central differences.
/// Magnitudes below 1e-5 are compared on an absolute scale, where central
/// differences are dominated by cancellation.
pub fn worst_relative_error(model: &Mlp, x: &[f64], w: &[f64]) -> f64 {
    let grad = model.backward(x, w).unwrap();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for i in 0..model.param_count() {
        let p = model.params()[i];
        probe.params_mut()[i] = p + STEP;
        let up = weighted_output(&probe, x, w);
        probe.params_mut()[i] = p - STEP;
        let down = weighted_output(&probe, x, w);
        probe.params_mut()[i] = p;
        let numeric = (up - down) / (2.0 * STEP);
        let analytic = grad.values()[i];
        let scale = analytic.abs().max(numeric.abs()).max(1e-5);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

/// Random topology, activations, input and output weighting for one case.
pub fn random_case(case: u64) -> (Mlp, Vec<f64>, Vec<f64>) {
    let hidden = [Activation::Relu, Activation::LeakyRelu, Activation::Identity];
    let output = [Activation::Identity, Activation::Sigmoid];
    let mut rng = stream(2024, case);
    let depth = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=6)).collect();
    let h = hidden[rng.random_range(0..hidden.len())];
    let o = output[rng.random_range(0..output.len())];
    let model = Mlp::new(&sizes, h, o, &mut rng).unwrap();
    let x = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = (0..sizes[depth]).map(|_| rng.random_range(-1.0..1.0)).collect();
    (model, x, w)
}
