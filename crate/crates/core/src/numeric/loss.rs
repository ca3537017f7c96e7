use crate::error::{Error, Result};

pub const DEFAULT_MSE_FLOOR: f64 = 1e-12;

pub fn mse(target: &[f64], prediction: &[f64]) -> Result<f64> {
    if target.len() != prediction.len() {
        return Err(Error::dims("mse", target.len(), prediction.len()));
    }
    if target.is_empty() {
        return Err(Error::dims("mse", 1, 0));
    }
    let sum: f64 = target
        .iter()
        .zip(prediction)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(sum / target.len() as f64)
}

/// `ln(max(floor, mse(target, prediction)))`, the per-transition error signal.
pub fn log_mse(target: &[f64], prediction: &[f64], floor: f64) -> Result<f64> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidConfig(format!("mse floor must be positive, got {floor}")));
    }
    Ok(mse(target, prediction)?.max(floor).ln())
}
