//! Global state prediction: the network mapping broadcast mean-proximity
//! values to the aggregate's next orientation change.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{adam_step, soft_update, Activation, AdamState, Gradient, LayerSpec, Mlp};
use crate::rl::ReplayBuffer;
use crate::sim::wrap_angle;

pub const GSP_HIDDEN_DEFAULT: [usize; 2] = [400, 300];

/// One entry of the prediction buffer: the broadcast before the step, the
/// prediction made, how it scored, the broadcast after, and the realized
/// orientation change it is evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct GspRecord {
    pub broadcast: Vec<f64>,
    pub dtheta_pred: f64,
    pub reward: f64,
    pub next_broadcast: Vec<f64>,
    pub done: bool,
    pub dtheta_true: f64,
}

/// How the prediction network is trained.
///
/// The default regresses directly on the realized orientation change that
/// becomes known one step later. The alternative treats the prediction as a
/// one-dimensional continuous action and trains it with DDPG on the
/// prediction reward; both modes must learn the same synthetic maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GspTraining {
    Regression,
    Ddpg,
}

impl GspTraining {
    pub(crate) fn tag(&self) -> u8 {
        match self {
            GspTraining::Regression => 0,
            GspTraining::Ddpg => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(GspTraining::Regression),
            1 => Some(GspTraining::Ddpg),
            _ => None,
        }
    }
}

/// DDPG-mode companions of the prediction network.
#[derive(Debug, Clone)]
pub struct GspDdpg {
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    pub critic_opt: AdamState,
}

/// The prediction network with its optimizer, training mode, and buffer.
#[derive(Debug, Clone)]
pub struct GspState {
    pub n_robots: usize,
    /// The prediction network: broadcast vector -> raw orientation change.
    pub net: Mlp,
    pub opt: AdamState,
    pub training: GspTraining,
    pub ddpg: Option<GspDdpg>,
    pub buffer: ReplayBuffer<GspRecord>,
    /// DDPG-mode action exploration: sigma (radians) of the Gaussian noise
    /// added to predictions during training episodes. Unused by regression.
    pub exploration_noise: f64,
}

/// Network stack for the predictor: N -> hidden -> hidden -> 1.
pub fn gsp_specs(n_robots: usize, hidden: [usize; 2]) -> Vec<LayerSpec> {
    LayerSpec::chain(
        &[n_robots, hidden[0], hidden[1], 1],
        Activation::ReLU,
        Activation::Identity,
    )
}

impl GspState {
    pub fn new<R: Rng + ?Sized>(
        n_robots: usize,
        hidden: [usize; 2],
        training: GspTraining,
        learning_rate: f64,
        critic_lr: f64,
        buffer_capacity: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_robots == 0 {
            return Err(Error::config("GSP needs at least one broadcast channel"));
        }
        let net = Mlp::new(&gsp_specs(n_robots, hidden), rng)?;
        let opt = AdamState::new(&net, learning_rate);
        let ddpg = match training {
            GspTraining::Regression => None,
            GspTraining::Ddpg => {
                let critic = Mlp::new(
                    &LayerSpec::chain(
                        &[n_robots + 1, hidden[0], hidden[1], 1],
                        Activation::ReLU,
                        Activation::Identity,
                    ),
                    rng,
                )?;
                Some(GspDdpg {
                    actor_target: net.clone(),
                    critic_target: critic.clone(),
                    critic_opt: AdamState::new(&critic, critic_lr),
                    critic,
                })
            }
        };
        Ok(Self {
            n_robots,
            net,
            opt,
            training,
            ddpg,
            buffer: ReplayBuffer::new(buffer_capacity),
            exploration_noise: 0.1,
        })
    }

    pub fn predict(&self, broadcast: &[f64]) -> Result<f64> {
        gsp_predict(&self.net, broadcast)
    }

    /// Borrowed view of the DDPG companions, if this state trains that way.
    pub fn ddpg_parts(&self) -> Option<GspDdpgParts<'_>> {
        self.ddpg.as_ref().map(|d| GspDdpgParts {
            actor_target: &d.actor_target,
            critic: &d.critic,
            critic_target: &d.critic_target,
            critic_opt: &d.critic_opt,
        })
    }

    /// Reassembles a state from persisted pieces (fresh, empty buffer).
    pub fn from_saved_parts(
        n_robots: usize,
        net: Mlp,
        opt: AdamState,
        training: GspTraining,
        ddpg: Option<(Mlp, Mlp, Mlp, AdamState)>,
        buffer: ReplayBuffer<GspRecord>,
    ) -> Self {
        Self {
            n_robots,
            net,
            opt,
            training,
            ddpg: ddpg.map(|(actor_target, critic, critic_target, critic_opt)| GspDdpg {
                actor_target,
                critic,
                critic_target,
                critic_opt,
            }),
            buffer,
            exploration_noise: 0.1,
        }
    }
}

/// Borrowed view of [`GspDdpg`] used by checkpointing.
pub struct GspDdpgParts<'a> {
    pub actor_target: &'a Mlp,
    pub critic: &'a Mlp,
    pub critic_target: &'a Mlp,
    pub critic_opt: &'a AdamState,
}

/// Forward pass wrapped into `(-pi, pi]`.
pub fn gsp_predict(net: &Mlp, broadcast: &[f64]) -> Result<f64> {
    if broadcast.len() != net.input_width() {
        return Err(Error::config(format!(
            "broadcast width {} != predictor input width {}",
            broadcast.len(),
            net.input_width()
        )));
    }
    Ok(wrap_angle(net.forward(broadcast)?[0]))
}

/// Prediction score: negative absolute wrapped error, maximal (0) when the
/// prediction matches the realized change exactly.
pub fn gsp_reward(dtheta_pred: f64, dtheta_true: f64) -> f64 {
    -wrap_angle(dtheta_pred - dtheta_true).abs()
}

/// One training iteration on a sampled batch; returns the batch loss
/// (regression MSE, or the critic loss in DDPG mode).
pub fn gsp_train_step<R: Rng + ?Sized>(
    state: &mut GspState,
    batch_size: usize,
    gamma: f64,
    tau: f64,
    rng: &mut R,
) -> Result<f64> {
    match state.training {
        GspTraining::Regression => {
            let batch = state.buffer.sample(batch_size, rng)?;
            let mut grad = Gradient::zeros_like(&state.net);
            let inv_b = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for record in &batch {
                let trace = state.net.forward_trace(&record.broadcast)?;
                let err = trace.output()[0] - record.dtheta_true;
                state
                    .net
                    .backward_from_trace(&trace, &[2.0 * err * inv_b], &mut grad)?;
                loss += err * err * inv_b;
            }
            adam_step(&mut state.net, &mut state.opt, &grad)?;
            Ok(loss)
        }
        GspTraining::Ddpg => {
            let batch: Vec<GspRecord> = state
                .buffer
                .sample(batch_size, rng)?
                .into_iter()
                .cloned()
                .collect();
            let ddpg = state
                .ddpg
                .as_mut()
                .ok_or_else(|| Error::config("DDPG-mode GSP without companion nets"))?;

            // Critic toward r + gamma * Q'(P', actor'(P')).
            let mut cgrad = Gradient::zeros_like(&ddpg.critic);
            let inv_b = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for record in &batch {
                let y = if record.done {
                    record.reward
                } else {
                    let next_pred = wrap_angle(ddpg.actor_target.forward(&record.next_broadcast)?[0]);
                    let input = concat(&record.next_broadcast, next_pred);
                    record.reward + gamma * ddpg.critic_target.forward(&input)?[0]
                };
                let input = concat(&record.broadcast, record.dtheta_pred);
                let trace = ddpg.critic.forward_trace(&input)?;
                let q = trace.output()[0];
                ddpg.critic
                    .backward_from_trace(&trace, &[2.0 * (q - y) * inv_b], &mut cgrad)?;
                loss += (q - y) * (q - y) * inv_b;
            }
            adam_step(&mut ddpg.critic, &mut ddpg.critic_opt, &cgrad)?;

            // Predictor ascends the critic through its one-dimensional action.
            let mut agrad = Gradient::zeros_like(&state.net);
            let mut scratch = Gradient::zeros_like(&ddpg.critic);
            let n = state.net.input_width();
            for record in &batch {
                let trace = state.net.forward_trace(&record.broadcast)?;
                let pred = trace.output()[0];
                let input = concat(&record.broadcast, pred);
                let ctrace = ddpg.critic.forward_trace(&input)?;
                let input_grad = ddpg
                    .critic
                    .backward_from_trace(&ctrace, &[1.0], &mut scratch)?;
                let dq_dpred = input_grad[n];
                state
                    .net
                    .backward_from_trace(&trace, &[-dq_dpred * inv_b], &mut agrad)?;
            }
            adam_step(&mut state.net, &mut state.opt, &agrad)?;

            soft_update(&state.net, &mut ddpg.actor_target, tau)?;
            soft_update(&ddpg.critic, &mut ddpg.critic_target, tau)?;
            Ok(loss)
        }
    }
}

fn concat(broadcast: &[f64], pred: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(broadcast.len() + 1);
    v.extend_from_slice(broadcast);
    v.push(pred);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::Distribution;
    use std::f64::consts::PI;

    #[test]
    fn reward_examples() {
        assert_eq!(gsp_reward(0.4, 0.4), 0.0);
        let r = gsp_reward(3.1, -3.1);
        assert!((r - -(2.0 * PI - 6.2)).abs() < 1e-12, "r = {r}");
        assert!((gsp_reward(PI, 0.0) - (-PI)).abs() < 1e-12);
    }

    #[test]
    fn predictions_are_wrapped_and_deterministic() {
        let mut rng = rng_from_seed(1);
        let state = GspState::new(4, [8, 8], GspTraining::Regression, 1e-3, 1e-3, 100, &mut rng)
            .unwrap();
        let p = vec![0.2, 0.4, 0.1, 0.9];
        let a = state.predict(&p).unwrap();
        let b = state.predict(&p).unwrap();
        assert_eq!(a, b);
        assert!(a > -PI && a <= PI);
        assert!(state.predict(&[0.1; 3]).is_err());
    }

    fn fill_linear_map_buffer<R: Rng + ?Sized>(
        state: &mut GspState,
        n: usize,
        samples: usize,
        rng: &mut R,
    ) {
        for _ in 0..samples {
            let broadcast: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let dtheta = 0.2 * (broadcast[0] - broadcast[1]);
            let next: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            state.buffer.push(GspRecord {
                dtheta_pred: 0.0,
                reward: gsp_reward(0.0, dtheta),
                broadcast,
                next_broadcast: next,
                done: false,
                dtheta_true: dtheta,
            });
        }
    }

    #[test]
    fn regression_learns_a_constant_target() {
        let mut rng = rng_from_seed(2);
        let mut state =
            GspState::new(2, [16, 16], GspTraining::Regression, 1e-3, 1e-3, 1000, &mut rng)
                .unwrap();
        let c = 0.42;
        for _ in 0..200 {
            let broadcast = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            state.buffer.push(GspRecord {
                dtheta_pred: 0.0,
                reward: gsp_reward(0.0, c),
                next_broadcast: broadcast.clone(),
                broadcast,
                done: false,
                dtheta_true: c,
            });
        }
        for _ in 0..3000 {
            gsp_train_step(&mut state, 32, 0.99, 0.01, &mut rng).unwrap();
        }
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let p = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            worst = worst.max((state.predict(&p).unwrap() - c).abs());
        }
        assert!(worst < 0.01, "worst error {worst}");
    }

    #[test]
    fn regression_learns_a_linear_map() {
        let mut rng = rng_from_seed(3);
        let mut state =
            GspState::new(2, [16, 16], GspTraining::Regression, 1e-3, 1e-3, 5000, &mut rng)
                .unwrap();
        fill_linear_map_buffer(&mut state, 2, 2000, &mut rng);
        for _ in 0..5000 {
            gsp_train_step(&mut state, 32, 0.99, 0.01, &mut rng).unwrap();
        }
        let mut mse = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let p = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let truth = 0.2 * (p[0] - p[1]);
            let err = state.predict(&p).unwrap() - truth;
            mse += err * err / trials as f64;
        }
        assert!(mse < 1e-3, "held-out mse {mse}");
    }

    #[test]
    fn zero_error_buffer_has_zero_regression_loss() {
        let mut rng = rng_from_seed(4);
        let mut state =
            GspState::new(2, [8, 8], GspTraining::Regression, 1e-3, 1e-3, 100, &mut rng).unwrap();
        // Inject records whose target equals the current prediction.
        for _ in 0..50 {
            let broadcast = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let pred = state.net.forward(&broadcast).unwrap()[0];
            state.buffer.push(GspRecord {
                dtheta_pred: pred,
                reward: 0.0,
                next_broadcast: broadcast.clone(),
                broadcast,
                done: true,
                dtheta_true: pred,
            });
        }
        let loss = gsp_train_step(&mut state, 16, 0.99, 0.01, &mut rng).unwrap();
        assert!(loss < 1e-24, "loss = {loss}");
    }

    #[test]
    fn ddpg_mode_improves_prediction_reward() {
        // On an interleaved stream with exploratory predictions, the
        // critic-guided mode drives predictions toward the realized value.
        let mut rng = rng_from_seed(5);
        let mut state =
            GspState::new(2, [16, 16], GspTraining::Ddpg, 1e-3, 1e-3, 4000, &mut rng).unwrap();
        let c = 0.3;
        let probe_error = |state: &GspState| -> f64 {
            (0..20)
                .map(|k| {
                    let p = vec![k as f64 / 20.0, 0.5];
                    (state.predict(&p).unwrap() - c).abs()
                })
                .sum::<f64>()
                / 20.0
        };
        let before = probe_error(&state);
        let noise = rand_distr::Normal::new(0.0, state.exploration_noise).unwrap();
        for _ in 0..60 {
            for _ in 0..40 {
                let broadcast = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let pred = crate::sim::wrap_angle(
                    state.predict(&broadcast).unwrap() + noise.sample(&mut rng),
                );
                state.buffer.push(GspRecord {
                    dtheta_pred: pred,
                    reward: gsp_reward(pred, c),
                    next_broadcast: broadcast.clone(),
                    broadcast,
                    done: true,
                    dtheta_true: c,
                });
            }
            for _ in 0..40 {
                gsp_train_step(&mut state, 32, 0.99, 0.01, &mut rng).unwrap();
            }
        }
        let after = probe_error(&state);
        assert!(
            after < 0.05 && after < before,
            "before {before}, after {after}"
        );
    }
}
