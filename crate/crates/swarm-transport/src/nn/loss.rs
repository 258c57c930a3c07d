use crate::error::{Error, Result};

/// Mean squared error and its gradient with respect to `prediction`:
/// `grad[i] = 2 * (prediction[i] - target[i]) / n`.
pub fn mse_loss_grad(prediction: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if prediction.len() != target.len() || prediction.is_empty() {
        return Err(Error::contract(format!(
            "mse over mismatched lengths {} vs {}",
            prediction.len(),
            target.len()
        )));
    }
    let n = prediction.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(prediction.len());
    for (p, t) in prediction.iter().zip(target) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((loss / n, grad))
}
