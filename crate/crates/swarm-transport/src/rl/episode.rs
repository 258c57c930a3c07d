//! The per-episode A-CTDE loop.
//!
//! One shared policy is queried once per robot per step on that robot's
//! (augmented) local observation; the joint action executes; every robot's
//! experience lands in the shared replay buffer; one learning iteration runs
//! per world step while training. Under GSP the broadcast/predict/record
//! cycle runs alongside, and the prediction network trains in the same loop.

use rand_chacha::ChaCha8Rng;

use super::action::Action;
use super::agent::{select_action_continuous, select_action_discrete, Agent};
use super::hyper::Hyperparams;
use super::learn::learn_step;
use super::replay::{ReplayBuffer, Transition};
use crate::coord::{
    augment, build_gk_augmentation, gsp_reward, gsp_train_step, proximity_broadcast,
    CoordinationMode, GspRecord, GspState,
};
use crate::error::{Error, Result};
use crate::sim::{Observation, TrajectoryWriter, WorldState};

/// What a finished episode reports.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub success: bool,
    pub steps: usize,
    /// Per robot slot (global index); failed robots keep their partial sum.
    pub returns: Vec<f64>,
    /// Mean loss over the learning iterations that ran (0 when none did).
    pub mean_loss: f64,
    pub transitions_pushed: usize,
    /// Epsilon after the episode's final action selection.
    pub final_epsilon: f64,
}

/// Mutable coordination state threaded through an episode. IC and GK carry
/// nothing; GSP carries the prediction network and its buffer.
pub struct CoordinationRuntime<'a> {
    pub mode: CoordinationMode,
    pub gsp: Option<&'a mut GspState>,
}

impl<'a> CoordinationRuntime<'a> {
    pub fn ic() -> Self {
        Self {
            mode: CoordinationMode::Ic,
            gsp: None,
        }
    }

    pub fn gk() -> Self {
        Self {
            mode: CoordinationMode::Gk,
            gsp: None,
        }
    }

    pub fn gsp(state: &'a mut GspState) -> Self {
        Self {
            mode: CoordinationMode::Gsp,
            gsp: Some(state),
        }
    }
}

/// Runs one episode to completion on a freshly reset world.
///
/// With `train` set, actions are exploratory (epsilon-greedy or Gaussian
/// noise), every transition is stored, and one learning iteration per world
/// step runs once the buffer is warm. Without it, actions are greedy and no
/// learnable state (parameters, buffers, counters) is touched.
#[allow(clippy::too_many_arguments)]
pub fn run_episode_actde<W: std::io::Write>(
    agent: &mut Agent,
    buffer: &mut ReplayBuffer<Transition>,
    world: &mut WorldState,
    coordination: &mut CoordinationRuntime<'_>,
    hp: &Hyperparams,
    train: bool,
    rng: &mut ChaCha8Rng,
    mut log: Option<&mut TrajectoryWriter<W>>,
) -> Result<EpisodeReport> {
    let n_robots = world.aggregate.robots.len();
    let expected_width = coordination.mode.policy_input_width(n_robots);
    if agent.obs_width() != expected_width {
        return Err(Error::config(format!(
            "policy input width {} != {} required by {} with {} robots",
            agent.obs_width(),
            expected_width,
            coordination.mode,
            n_robots
        )));
    }
    if world.step_index != 0 {
        return Err(Error::contract("world must be freshly reset"));
    }
    if let Some(gsp) = coordination.gsp.as_deref() {
        if gsp.net.input_width() != n_robots {
            return Err(Error::config(format!(
                "prediction network expects {} channels, world has {} robots",
                gsp.net.input_width(),
                n_robots
            )));
        }
    } else if coordination.mode == CoordinationMode::Gsp {
        return Err(Error::config("GSP mode without a prediction network"));
    }

    // DDPG-trained prediction nets explore like any DDPG actor: the noised
    // prediction is what gets broadcast, fed to the policy, and stored.
    let explore_gsp = train
        && coordination
            .gsp
            .as_deref()
            .is_some_and(|g| g.training == crate::coord::GspTraining::Ddpg);

    let mut attached = world.attached_indices();
    let observations = world.observations();
    let mut broadcast = proximity_broadcast(n_robots, &attached, &observations);
    let mut dtheta_pred = match coordination.gsp.as_deref() {
        Some(gsp) => predict_maybe_noisy(gsp, &broadcast, explore_gsp, rng)?,
        None => 0.0,
    };
    let mut augmented = augment_all(
        world,
        coordination.mode,
        &attached,
        &observations,
        dtheta_pred,
    )?;

    let mut returns = vec![0.0; n_robots];
    let mut transitions_pushed = 0;
    let mut loss_sum = 0.0;
    let mut loss_events = 0usize;
    let mut steps = 0;
    let success;

    loop {
        let mut actions = Vec::with_capacity(attached.len());
        let mut deltas = Vec::with_capacity(attached.len());
        for obs in &augmented {
            let action = if train {
                agent.action_selections += 1;
                if agent.is_discrete() {
                    let eps = hp.epsilon(agent.action_selections.saturating_sub(1));
                    Action::Discrete(select_action_discrete(agent, obs, eps, rng)?)
                } else {
                    Action::Continuous(select_action_continuous(
                        agent,
                        obs,
                        true,
                        hp.exploration_noise,
                        rng,
                    )?)
                }
            } else {
                agent.greedy_action(obs)?
            };
            deltas.push(action.wheel_delta()?);
            actions.push(action);
        }

        let outcome = world.step(&deltas)?;
        steps += 1;

        let now_attached = world.attached_indices();
        let next_broadcast = proximity_broadcast(n_robots, &now_attached, &outcome.observations);
        let next_dtheta_pred = match coordination.gsp.as_deref() {
            Some(gsp) => predict_maybe_noisy(gsp, &next_broadcast, explore_gsp, rng)?,
            None => 0.0,
        };
        let next_augmented = augment_all(
            world,
            coordination.mode,
            &now_attached,
            &outcome.observations,
            next_dtheta_pred,
        )?;

        if let Some(writer) = log.as_deref_mut() {
            writer.write_step(world, &attached, &deltas, &outcome)?;
        }

        // Store one transition per robot that acted and is still attached.
        for (slot_now, &robot) in now_attached.iter().enumerate() {
            let Some(slot_prev) = attached.iter().position(|&r| r == robot) else {
                continue;
            };
            returns[robot] += outcome.rewards[slot_now];
            if train {
                buffer.push(Transition {
                    obs: augmented[slot_prev].clone(),
                    action: actions[slot_prev],
                    reward: outcome.rewards[slot_now],
                    next_obs: next_augmented[slot_now].clone(),
                    done: outcome.done,
                });
                transitions_pushed += 1;
            }
        }

        if train {
            if let Some(gsp) = coordination.gsp.as_deref_mut() {
                gsp.buffer.push(GspRecord {
                    broadcast: broadcast.clone(),
                    dtheta_pred,
                    reward: gsp_reward(dtheta_pred, outcome.aggregate_dtheta),
                    next_broadcast: next_broadcast.clone(),
                    done: outcome.done,
                    dtheta_true: outcome.aggregate_dtheta,
                });
            }
            if buffer.len() >= hp.batch_size {
                loss_sum += learn_step(agent, buffer, hp, rng)?;
                loss_events += 1;
            }
            if let Some(gsp) = coordination.gsp.as_deref_mut() {
                if gsp.buffer.len() >= hp.batch_size {
                    gsp_train_step(gsp, hp.batch_size, hp.gamma, hp.tau, rng)?;
                }
            }
        }

        attached = now_attached;
        augmented = next_augmented;
        broadcast = next_broadcast;
        dtheta_pred = next_dtheta_pred;

        if outcome.done {
            success = outcome.success;
            break;
        }
    }

    Ok(EpisodeReport {
        success,
        steps,
        returns,
        mean_loss: if loss_events > 0 {
            loss_sum / loss_events as f64
        } else {
            0.0
        },
        transitions_pushed,
        final_epsilon: hp.epsilon(agent.action_selections),
    })
}

fn predict_maybe_noisy(
    gsp: &GspState,
    broadcast: &[f64],
    explore: bool,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    use rand_distr::Distribution;
    let pred = gsp.predict(broadcast)?;
    if explore && gsp.exploration_noise > 0.0 {
        let normal = rand_distr::Normal::new(0.0, gsp.exploration_noise)
            .map_err(|_| Error::config("GSP exploration noise must be non-negative"))?;
        Ok(crate::sim::wrap_angle(pred + normal.sample(rng)))
    } else {
        Ok(pred)
    }
}

fn augment_all(
    world: &WorldState,
    mode: CoordinationMode,
    attached: &[usize],
    observations: &[Observation],
    dtheta_pred: f64,
) -> Result<Vec<Vec<f64>>> {
    attached
        .iter()
        .zip(observations)
        .map(|(&robot, obs)| match mode {
            CoordinationMode::Ic => augment(obs, mode, &[]),
            CoordinationMode::Gk => {
                let packet = build_gk_augmentation(world, robot);
                augment(obs, mode, &packet)
            }
            CoordinationMode::Gsp => augment(obs, mode, &[dtheta_pred]),
        })
        .collect()
}
