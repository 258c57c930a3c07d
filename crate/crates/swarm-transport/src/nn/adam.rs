//! Adam with bias correction.

use super::{Gradient, Mlp};
use crate::error::{Error, Result};

/// Optimizer moments and constants for one [`Mlp`].
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Gradient,
    pub second_moment: Gradient,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self::with_constants(net, learning_rate, 0.9, 0.999, 1e-8)
            .expect("default Adam constants are in range")
    }

    pub fn with_constants(
        net: &Mlp,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if learning_rate <= 0.0 {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0.0 < beta1 && beta1 < 1.0 && 0.0 < beta2 && beta2 < 1.0) {
            return Err(Error::config("Adam betas must lie in (0, 1)"));
        }
        if !(0.0 < epsilon && epsilon < 1e-4) {
            return Err(Error::config("Adam epsilon must lie in (0, 1e-4)"));
        }
        Ok(Self {
            first_moment: Gradient::zeros_like(net),
            second_moment: Gradient::zeros_like(net),
            step_count: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        })
    }
}

/// One Adam update over every parameter of `net`.
///
/// Validates the gradient (shape and finiteness) before touching any state,
/// so a diverged batch leaves both the network and the moments untouched.
pub fn adam_step(net: &mut Mlp, state: &mut AdamState, grad: &Gradient) -> Result<()> {
    grad.check_shape(net)?;
    state.first_moment.check_shape(net)?;
    state.second_moment.check_shape(net)?;
    if !grad.is_finite() {
        return Err(Error::divergence("non-finite gradient"));
    }

    let t = state.step_count + 1;
    let bias1 = 1.0 - state.beta1.powi(t as i32);
    let bias2 = 1.0 - state.beta2.powi(t as i32);
    let specs = net.specs();

    for k in 0..specs.len() {
        update_slice(
            net.layer_weights_mut(k),
            &mut state.first_moment.d_weights[k],
            &mut state.second_moment.d_weights[k],
            &grad.d_weights[k],
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.epsilon,
            bias1,
            bias2,
        );
        update_slice(
            net.layer_biases_mut(k),
            &mut state.first_moment.d_biases[k],
            &mut state.second_moment.d_biases[k],
            &grad.d_biases[k],
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.epsilon,
            bias1,
            bias2,
        );
    }
    state.step_count = t;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
