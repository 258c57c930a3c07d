//! Dense feed-forward network with exact reverse-mode gradients.
//!
//! Weights are row-major `(output_width, input_width)`. The backward pass
//! returns gradients of `output · output_grad` with respect to every
//! parameter and to the input; the input gradient is what lets an actor
//! update chain through a critic.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
        }
    }

    /// Specs for a `widths[0] -> widths[1] -> ...` stack with `hidden` on all
    /// interior layers and `output` on the last.
    pub fn chain(widths: &[usize], hidden: Activation, output: Activation) -> Vec<LayerSpec> {
        assert!(widths.len() >= 2, "need at least input and output widths");
        (0..widths.len() - 1)
            .map(|k| {
                let act = if k + 2 == widths.len() { output } else { hidden };
                LayerSpec::new(widths[k], widths[k + 1], act)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    spec: LayerSpec,
    /// Row-major (output_width, input_width).
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// A dense feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shape-matched to an [`Mlp`].
#[derive(Debug, Clone)]
pub struct Gradient {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
}

/// Post-activation values of every layer for one input, plus the input
/// itself; consumed by [`Mlp::backward_from_trace`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// `values[0]` is the input, `values[k]` the output of layer `k-1`.
    values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("trace holds at least the input")
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::config("network needs at least one layer"));
    }
    for spec in specs {
        if spec.input_width == 0 || spec.output_width == 0 {
            return Err(Error::config("layer widths must be >= 1"));
        }
    }
    for pair in specs.windows(2) {
        if pair[0].output_width != pair[1].input_width {
            return Err(Error::config(format!(
                "layer widths do not chain: {} -> {}",
                pair[0].output_width, pair[1].input_width
            )));
        }
    }
    Ok(())
}

impl Mlp {
    /// Randomly initialized network: weights and biases uniform in
    /// `±1/sqrt(fan_in)` per layer.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        validate_specs(specs)?;
        let layers = specs
            .iter()
            .map(|&spec| {
                let limit = 1.0 / (spec.input_width as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                let weights = (0..spec.input_width * spec.output_width)
                    .map(|_| dist.sample(rng))
                    .collect();
                let biases = (0..spec.output_width).map(|_| dist.sample(rng)).collect();
                Layer {
                    spec,
                    weights,
                    biases,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Network from explicit parameters; `weights[k]` is row-major
    /// `(output_width, input_width)` for layer `k`.
    pub fn from_parts(
        specs: &[LayerSpec],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_specs(specs)?;
        if weights.len() != specs.len() || biases.len() != specs.len() {
            return Err(Error::contract("parameter list length != layer count"));
        }
        let layers = specs
            .iter()
            .zip(weights)
            .zip(biases)
            .map(|((&spec, w), b)| {
                if w.len() != spec.input_width * spec.output_width {
                    return Err(Error::contract(format!(
                        "weight matrix size {} != {}x{}",
                        w.len(),
                        spec.output_width,
                        spec.input_width
                    )));
                }
                if b.len() != spec.output_width {
                    return Err(Error::contract(format!(
                        "bias size {} != {}",
                        b.len(),
                        spec.output_width
                    )));
                }
                Ok(Layer {
                    spec,
                    weights: w,
                    biases: b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].spec.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").spec.output_width
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub(crate) fn layer_weights(&self, k: usize) -> &[f64] {
        &self.layers[k].weights
    }

    pub(crate) fn layer_biases(&self, k: usize) -> &[f64] {
        &self.layers[k].biases
    }

    pub(crate) fn layer_weights_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.layers[k].weights
    }

    pub(crate) fn layer_biases_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.layers[k].biases
    }

    /// Flat copy of all parameters, layer by layer, weights then biases.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// FNV-1a hash over the raw parameter bits; used to assert that two
    /// queries really hit the same parameter set.
    pub fn value_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for layer in &self.layers {
            layer.weights.iter().copied().for_each(&mut eat);
            layer.biases.iter().copied().for_each(&mut eat);
        }
        h
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::contract(format!(
                "input length {} != network input width {}",
                input.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        for layer in &self.layers {
            current = layer.forward(&current);
        }
        Ok(current)
    }

    /// Forward pass that keeps every layer's post-activation output.
    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input)?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(input.to_vec());
        for layer in &self.layers {
            let next = layer.forward(values.last().expect("non-empty"));
            values.push(next);
        }
        Ok(Trace { values })
    }

    /// Exact gradients of `output · output_grad` with respect to all
    /// parameters and the input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Gradient, Vec<f64>)> {
        let trace = self.forward_trace(input)?;
        let mut grad = Gradient::zeros_like(self);
        let input_grad = self.backward_from_trace(&trace, output_grad, &mut grad)?;
        Ok((grad, input_grad))
    }

    /// Backprop off a stored trace, accumulating parameter gradients into
    /// `grad` (so a mini-batch sums sample gradients in place). Returns the
    /// input gradient.
    pub fn backward_from_trace(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grad: &mut Gradient,
    ) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_width() {
            return Err(Error::contract(format!(
                "output_grad length {} != network output width {}",
                output_grad.len(),
                self.output_width()
            )));
        }
        if trace.values.len() != self.layers.len() + 1
            || trace.values[0].len() != self.input_width()
        {
            return Err(Error::contract("trace does not match network"));
        }
        grad.check_shape(self)?;

        let mut upstream = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let inputs = &trace.values[k];
            let outputs = &trace.values[k + 1];
            upstream = layer.backward_accumulate(
                inputs,
                outputs,
                &upstream,
                &mut grad.d_weights[k],
                &mut grad.d_biases[k],
            );
        }
        Ok(upstream)
    }
}

impl Layer {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        let n_in = self.spec.input_width;
        let mut out = Vec::with_capacity(self.spec.output_width);
        for o in 0..self.spec.output_width {
            let row = &self.weights[o * n_in..(o + 1) * n_in];
            let mut z = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            out.push(self.spec.activation.apply(z));
        }
        out
    }

    /// Accumulates parameter gradients, returns dL/d(input).
    fn backward_accumulate(
        &self,
        inputs: &[f64],
        outputs: &[f64],
        d_outputs: &[f64],
        d_weights: &mut [f64],
        d_biases: &mut [f64],
    ) -> Vec<f64> {
        let n_in = self.spec.input_width;
        let mut d_inputs = vec![0.0; n_in];
        for o in 0..self.spec.output_width {
            let dz = d_outputs[o] * self.spec.activation.grad_from_output(outputs[o]);
            d_biases[o] += dz;
            let row = o * n_in;
            for i in 0..n_in {
                d_weights[row + i] += dz * inputs[i];
                d_inputs[i] += self.weights[row + i] * dz;
            }
        }
        d_inputs
    }
}

impl Gradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            d_weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            d_biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn check_shape(&self, net: &Mlp) -> Result<()> {
        let ok = self.d_weights.len() == net.layers.len()
            && self.d_biases.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(k, l)| {
                self.d_weights[k].len() == l.weights.len()
                    && self.d_biases[k].len() == l.biases.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::contract("gradient shape does not match network"))
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b {
                *v *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_weights
            .iter()
            .chain(self.d_biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Copies `source` parameters into `target` verbatim.
pub fn hard_copy(source: &Mlp, target: &mut Mlp) -> Result<()> {
    if source.specs() != target.specs() {
        return Err(Error::contract("hard_copy across different layer specs"));
    }
    for (src, dst) in source.layers.iter().zip(&mut target.layers) {
        dst.weights.copy_from_slice(&src.weights);
        dst.biases.copy_from_slice(&src.biases);
    }
    Ok(())
}

/// Polyak averaging: `target <- tau*source + (1-tau)*target`.
pub fn soft_update(source: &Mlp, target: &mut Mlp, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::config(format!("tau {tau} outside (0, 1]")));
    }
    if source.specs() != target.specs() {
        return Err(Error::contract("soft_update across different layer specs"));
    }
    for (src, dst) in source.layers.iter().zip(&mut target.layers) {
        for (t, s) in dst.weights.iter_mut().zip(&src.weights) {
            *t = tau * s + (1.0 - tau) * *t;
        }
        for (t, s) in dst.biases.iter_mut().zip(&src.biases) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn identity_net(width: usize, activation: Activation) -> Mlp {
        let spec = LayerSpec::new(width, width, activation);
        let mut weights = vec![0.0; width * width];
        for i in 0..width {
            weights[i * width + i] = 1.0;
        }
        Mlp::from_parts(&[spec], vec![weights], vec![vec![0.0; width]]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = identity_net(3, Activation::Identity);
        let out = net.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn relu_layer_clamps_negatives() {
        let net = identity_net(2, Activation::ReLU);
        let out = net.forward(&[-1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.0, 2.0]);
    }

    #[test]
    fn forward_matches_hand_computed_chain() {
        // 2 -> 2 -> 1, all identity: easy to fold by hand.
        let specs = [
            LayerSpec::new(2, 2, Activation::Identity),
            LayerSpec::new(2, 1, Activation::Identity),
        ];
        let net = Mlp::from_parts(
            &specs,
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, -1.0]],
            vec![vec![0.1, -0.2], vec![0.3]],
        )
        .unwrap();
        let x = [1.5, -0.5];
        // layer 1: (1*1.5 + 2*(-0.5) + 0.1, 3*1.5 + 4*(-0.5) - 0.2) = (0.6, 2.3)
        // layer 2: 0.5*0.6 - 1.0*2.3 + 0.3 = -1.7
        let out = net.forward(&x).unwrap();
        assert!((out[0] - (-1.7)).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_independent_dense_arithmetic_on_random_net() {
        // Oracle: a plain nested-loop matrix-multiply chain, written separately.
        let specs = LayerSpec::chain(&[3, 4, 2], Activation::Tanh, Activation::Identity);
        let mut rng = rng_from_seed(42);
        let net = Mlp::new(&specs, &mut rng).unwrap();
        let x = [0.3, -0.8, 0.12];

        let mut expect: Vec<f64> = x.to_vec();
        for (k, spec) in specs.iter().enumerate() {
            let w = net.layer_weights(k);
            let b = net.layer_biases(k);
            let mut next = vec![0.0; spec.output_width];
            for (o, n) in next.iter_mut().enumerate() {
                let mut z = b[o];
                for (i, xi) in expect.iter().enumerate() {
                    z += w[o * spec.input_width + i] * xi;
                }
                *n = spec.activation.apply(z);
            }
            expect = next;
        }

        let got = net.forward(&x).unwrap();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = identity_net(3, Activation::Identity);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn backward_identity_layer_weight_grad_is_input_outer_product() {
        let net = identity_net(2, Activation::Identity);
        let input = [3.0, -4.0];
        let (grad, input_grad) = net.backward(&input, &[1.0, 0.0]).unwrap();
        // only output 0 selected: d w[0][i] = input[i], row 1 zero
        assert_eq!(grad.d_weights[0], vec![3.0, -4.0, 0.0, 0.0]);
        assert_eq!(grad.d_biases[0], vec![1.0, 0.0]);
        // input grad = W^T * [1, 0] = first column of identity
        assert_eq!(input_grad, vec![1.0, 0.0]);
    }

    #[test]
    fn backward_zero_output_grad_gives_zero_gradients() {
        let specs = LayerSpec::chain(&[3, 5, 2], Activation::ReLU, Activation::Tanh);
        let mut rng = rng_from_seed(7);
        let net = Mlp::new(&specs, &mut rng).unwrap();
        let (grad, input_grad) = net.backward(&[0.2, -0.3, 0.9], &[0.0, 0.0]).unwrap();
        assert!(grad.d_weights.iter().flatten().all(|&g| g == 0.0));
        assert!(grad.d_biases.iter().flatten().all(|&g| g == 0.0));
        assert!(input_grad.iter().all(|&g| g == 0.0));
    }

    /// Central finite differences of `output · output_grad`.
    fn fd_check(net: &Mlp, input: &[f64], output_grad: &[f64]) {
        let h = 1e-5;
        let scalar = |n: &Mlp, x: &[f64]| -> f64 {
            n.forward(x)
                .unwrap()
                .iter()
                .zip(output_grad)
                .map(|(o, g)| o * g)
                .sum()
        };
        let (grad, input_grad) = net.backward(input, output_grad).unwrap();
        let close = |analytic: f64, numeric: f64| {
            let diff = (analytic - numeric).abs();
            let scale = analytic.abs().max(numeric.abs());
            assert!(
                diff <= 1e-7 + 1e-4 * scale,
                "analytic {analytic} vs numeric {numeric}"
            );
        };

        let specs = net.specs();
        for k in 0..specs.len() {
            for p in 0..net.layer_weights(k).len() {
                let mut plus = net.clone();
                plus.layers[k].weights[p] += h;
                let mut minus = net.clone();
                minus.layers[k].weights[p] -= h;
                close(
                    grad.d_weights[k][p],
                    (scalar(&plus, input) - scalar(&minus, input)) / (2.0 * h),
                );
            }
            for p in 0..net.layer_biases(k).len() {
                let mut plus = net.clone();
                plus.layers[k].biases[p] += h;
                let mut minus = net.clone();
                minus.layers[k].biases[p] -= h;
                close(
                    grad.d_biases[k][p],
                    (scalar(&plus, input) - scalar(&minus, input)) / (2.0 * h),
                );
            }
        }
        for i in 0..input.len() {
            let mut plus = input.to_vec();
            plus[i] += h;
            let mut minus = input.to_vec();
            minus[i] -= h;
            close(
                input_grad[i],
                (scalar(net, &plus) - scalar(net, &minus)) / (2.0 * h),
            );
        }
    }

    #[test]
    fn backward_matches_finite_differences_on_random_nets() {
        let mut rng = rng_from_seed(12345);
        for trial in 0..10 {
            let specs = LayerSpec::chain(
                &[3 + trial % 3, 4, 2 + trial % 2],
                if trial % 2 == 0 {
                    Activation::Tanh
                } else {
                    Activation::ReLU
                },
                Activation::Identity,
            );
            let net = Mlp::new(&specs, &mut rng).unwrap();
            let input: Vec<f64> = (0..net.input_width())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let output_grad: Vec<f64> = (0..net.output_width())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            fd_check(&net, &input, &output_grad);
        }
    }

    #[test]
    fn hard_copy_decouples_storage() {
        let specs = LayerSpec::chain(&[2, 3, 1], Activation::ReLU, Activation::Identity);
        let mut rng = rng_from_seed(3);
        let source = Mlp::new(&specs, &mut rng).unwrap();
        let mut target = Mlp::new(&specs, &mut rng).unwrap();
        hard_copy(&source, &mut target).unwrap();
        let x = [0.4, -0.6];
        assert_eq!(source.forward(&x).unwrap(), target.forward(&x).unwrap());

        // Perturb the source; the copy must not move.
        let mut perturbed = source.clone();
        perturbed.layers[0].weights[0] += 0.5;
        let before = target.forward(&x).unwrap();
        assert_eq!(before, target.forward(&x).unwrap());
        let diff: f64 = perturbed
            .flat_parameters()
            .iter()
            .zip(target.flat_parameters())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!((diff - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hard_copy_rejects_spec_mismatch() {
        let mut rng = rng_from_seed(3);
        let a = Mlp::new(
            &LayerSpec::chain(&[2, 3], Activation::ReLU, Activation::ReLU),
            &mut rng,
        )
        .unwrap();
        let mut b = Mlp::new(
            &LayerSpec::chain(&[2, 4], Activation::ReLU, Activation::ReLU),
            &mut rng,
        )
        .unwrap();
        assert!(hard_copy(&a, &mut b).is_err());
    }

    #[test]
    fn soft_update_tau_one_equals_hard_copy() {
        let specs = LayerSpec::chain(&[2, 2], Activation::Identity, Activation::Identity);
        let mut rng = rng_from_seed(9);
        let source = Mlp::new(&specs, &mut rng).unwrap();
        let mut a = Mlp::new(&specs, &mut rng).unwrap();
        let mut b = a.clone();
        soft_update(&source, &mut a, 1.0).unwrap();
        hard_copy(&source, &mut b).unwrap();
        assert_eq!(a.flat_parameters(), b.flat_parameters());
    }

    #[test]
    fn soft_update_halfway_point() {
        let spec = [LayerSpec::new(1, 1, Activation::Identity)];
        let source = Mlp::from_parts(&spec, vec![vec![2.0]], vec![vec![2.0]]).unwrap();
        let mut target = Mlp::from_parts(&spec, vec![vec![0.0]], vec![vec![0.0]]).unwrap();
        soft_update(&source, &mut target, 0.5).unwrap();
        assert_eq!(target.flat_parameters(), vec![1.0, 1.0]);
    }

    #[test]
    fn repeated_soft_update_converges_geometrically() {
        let spec = [LayerSpec::new(1, 1, Activation::Identity)];
        let source = Mlp::from_parts(&spec, vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        let mut target = Mlp::from_parts(&spec, vec![vec![0.0]], vec![vec![0.0]]).unwrap();
        let tau = 0.25;
        for k in 1..=20 {
            soft_update(&source, &mut target, tau).unwrap();
            let gap = 1.0 - target.flat_parameters()[0];
            let expect = (1.0 - tau).powi(k);
            assert!(
                (gap - expect).abs() < 1e-12,
                "step {k}: gap {gap} vs {expect}"
            );
        }
    }

    #[test]
    fn soft_update_rejects_bad_tau() {
        let spec = [LayerSpec::new(1, 1, Activation::Identity)];
        let source = Mlp::from_parts(&spec, vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        let mut target = source.clone();
        assert!(matches!(
            soft_update(&source, &mut target, 0.0),
            Err(crate::Error::Config(_))
        ));
        assert!(soft_update(&source, &mut target, 1.5).is_err());
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let specs = LayerSpec::chain(&[4, 8, 3], Activation::ReLU, Activation::Tanh);
        let a = Mlp::new(&specs, &mut rng_from_seed(11)).unwrap();
        let b = Mlp::new(&specs, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a.flat_parameters(), b.flat_parameters());
        assert_eq!(a.value_hash(), b.value_hash());
    }
}
