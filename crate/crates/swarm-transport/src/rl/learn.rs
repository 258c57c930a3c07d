//! Target computation and gradient steps for DQN, DDQN, DDPG, and TD3.
//!
//! All Q losses are mean squared TD error. Actor updates ascend the critic by
//! chaining the critic's input gradient (the action slice) through the
//! tanh-squashed actor.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::action::Action;
use super::agent::{argmax_lowest, Agent, AgentNets};
use super::hyper::Hyperparams;
use super::replay::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::nn::{adam_step, hard_copy, soft_update, AdamState, Gradient, Mlp};
use crate::sim::ACTION_LIMIT_CM_S;

/// `y = r + gamma * max_a' Q_target(o', a')`, cut to `y = r` on terminal
/// transitions.
pub fn dqn_target(target: &Mlp, transition: &Transition, gamma: f64) -> Result<f64> {
    if transition.done {
        return Ok(transition.reward);
    }
    let q_next = target.forward(&transition.next_obs)?;
    let best = q_next[argmax_lowest(&q_next)];
    Ok(transition.reward + gamma * best)
}

/// Double-Q target: the online net selects the action, the target net
/// evaluates it. `y = r` on terminal transitions.
pub fn ddqn_target(
    online: &Mlp,
    target: &Mlp,
    transition: &Transition,
    gamma: f64,
) -> Result<f64> {
    if transition.done {
        return Ok(transition.reward);
    }
    let chosen = argmax_lowest(&online.forward(&transition.next_obs)?);
    let q_next = target.forward(&transition.next_obs)?;
    Ok(transition.reward + gamma * q_next[chosen])
}

/// DDPG critic target: bootstrap through the target actor.
pub fn ddpg_target(
    actor_target: &Mlp,
    critic_target: &Mlp,
    transition: &Transition,
    gamma: f64,
) -> Result<f64> {
    if transition.done {
        return Ok(transition.reward);
    }
    let action = scaled_actor_output(actor_target, &transition.next_obs)?;
    let q = critic_target.forward(&concat_obs_action(&transition.next_obs, &action))?[0];
    Ok(transition.reward + gamma * q)
}

/// TD3 critic target: smoothed target action, clipped double-Q bootstrap.
/// `sigma`/`clip` are in cm/s; `sigma = 0` makes the target deterministic.
#[allow(clippy::too_many_arguments)]
pub fn td3_target<R: Rng + ?Sized>(
    actor_target: &Mlp,
    critic1_target: &Mlp,
    critic2_target: &Mlp,
    transition: &Transition,
    gamma: f64,
    sigma: f64,
    clip: f64,
    rng: &mut R,
) -> Result<f64> {
    if transition.done {
        return Ok(transition.reward);
    }
    let mut action = scaled_actor_output(actor_target, &transition.next_obs)?;
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma)
            .map_err(|_| Error::config("target smoothing sigma must be non-negative"))?;
        for a in &mut action {
            let noise = normal.sample(rng).clamp(-clip, clip);
            *a = (*a + noise).clamp(-ACTION_LIMIT_CM_S, ACTION_LIMIT_CM_S);
        }
    }
    let input = concat_obs_action(&transition.next_obs, &action);
    let q1 = critic1_target.forward(&input)?[0];
    let q2 = critic2_target.forward(&input)?[0];
    Ok(transition.reward + gamma * q1.min(q2))
}

/// One mean-squared-TD-error Adam step on the online Q net; hard-syncs the
/// target every `target_sync_every` completed iterations.
pub fn learn_step_q<R: Rng + ?Sized>(
    agent: &mut Agent,
    buffer: &ReplayBuffer<Transition>,
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    let batch = buffer.sample(hp.batch_size, rng)?;
    let loss = match &mut agent.nets {
        AgentNets::Dqn { online, target, opt } => {
            q_batch_step(online, target, opt, &batch, hp.gamma, false)?
        }
        AgentNets::Ddqn { online, target, opt } => {
            q_batch_step(online, target, opt, &batch, hp.gamma, true)?
        }
        _ => return Err(Error::contract("learn_step_q on a continuous agent")),
    };
    agent.learn_counter += 1;
    if agent.learn_counter % hp.target_sync_every == 0 {
        match &mut agent.nets {
            AgentNets::Dqn { online, target, .. } | AgentNets::Ddqn { online, target, .. } => {
                hard_copy(online, target)?;
            }
            _ => unreachable!(),
        }
    }
    Ok(loss)
}

fn q_batch_step(
    online: &mut Mlp,
    target: &Mlp,
    opt: &mut AdamState,
    batch: &[&Transition],
    gamma: f64,
    double: bool,
) -> Result<f64> {
    let mut grad = Gradient::zeros_like(online);
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        let y = if double {
            ddqn_target(online, target, t, gamma)?
        } else {
            dqn_target(target, t, gamma)?
        };
        let Action::Discrete(a) = t.action else {
            return Err(Error::contract("continuous transition in a Q batch"));
        };
        let trace = online.forward_trace(&t.obs)?;
        let q = trace.output()[a];
        let mut out_grad = vec![0.0; trace.output().len()];
        out_grad[a] = 2.0 * (q - y) * inv_b;
        online.backward_from_trace(&trace, &out_grad, &mut grad)?;
        loss += (q - y) * (q - y) * inv_b;
    }
    adam_step(online, opt, &grad)?;
    Ok(loss)
}

/// Ascends `mean Q` by one Adam step given `dQ/da` per sample (`a` in cm/s).
///
/// This is the primitive both DDPG and TD3 actor updates go through; tests
/// can drive it with an analytically known critic.
pub fn actor_ascent_step(
    actor: &mut Mlp,
    opt: &mut AdamState,
    samples: &[(Vec<f64>, [f64; 2])],
) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::contract("empty actor batch"));
    }
    let mut grad = Gradient::zeros_like(actor);
    let inv_b = 1.0 / samples.len() as f64;
    for (obs, dq_da) in samples {
        let trace = actor.forward_trace(obs)?;
        // a = limit * y, minimize -Q: d(-Q)/dy = -limit * dQ/da
        let out_grad = [
            -ACTION_LIMIT_CM_S * dq_da[0] * inv_b,
            -ACTION_LIMIT_CM_S * dq_da[1] * inv_b,
        ];
        actor.backward_from_trace(&trace, &out_grad, &mut grad)?;
    }
    adam_step(actor, opt, &grad)
}

/// DDPG: critic TD step, actor ascent through the updated critic, Polyak
/// updates of both targets. Returns `(critic_loss, actor_objective)`.
pub fn learn_step_ddpg<R: Rng + ?Sized>(
    agent: &mut Agent,
    buffer: &ReplayBuffer<Transition>,
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let batch = buffer.sample(hp.batch_size, rng)?;
    let AgentNets::Ddpg {
        actor,
        actor_target,
        critic,
        critic_target,
        actor_opt,
        critic_opt,
    } = &mut agent.nets
    else {
        return Err(Error::contract("learn_step_ddpg on a non-DDPG agent"));
    };

    let targets = batch
        .iter()
        .map(|t| ddpg_target(actor_target, critic_target, t, hp.gamma))
        .collect::<Result<Vec<_>>>()?;
    let critic_loss = critic_td_step(critic, critic_opt, &batch, &targets)?;

    let obs_width = actor.input_width();
    let mut samples = Vec::with_capacity(batch.len());
    let mut objective = 0.0;
    let mut scratch = Gradient::zeros_like(critic);
    for t in batch.iter() {
        let action = scaled_actor_output(actor, &t.obs)?;
        let trace = critic.forward_trace(&concat_obs_action(&t.obs, &action))?;
        objective += trace.output()[0] / batch.len() as f64;
        let input_grad = critic.backward_from_trace(&trace, &[1.0], &mut scratch)?;
        samples.push((t.obs.clone(), [input_grad[obs_width], input_grad[obs_width + 1]]));
    }
    actor_ascent_step(actor, actor_opt, &samples)?;

    soft_update(actor, actor_target, hp.tau)?;
    soft_update(critic, critic_target, hp.tau)?;
    agent.learn_counter += 1;
    Ok((critic_loss, objective))
}

#[derive(Debug, Clone, Copy)]
pub struct Td3Losses {
    pub critic1: f64,
    pub critic2: f64,
    /// Present only on iterations where the delayed actor update ran.
    pub actor_objective: Option<f64>,
}

/// TD3: both critics step every iteration toward the clipped double-Q
/// target; the actor and all three targets update every `policy_delay`
/// completed iterations.
pub fn learn_step_td3<R: Rng + ?Sized>(
    agent: &mut Agent,
    buffer: &ReplayBuffer<Transition>,
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<Td3Losses> {
    let batch = buffer.sample(hp.batch_size, rng)?;
    let AgentNets::Td3 {
        actor,
        actor_target,
        critic1,
        critic2,
        critic1_target,
        critic2_target,
        actor_opt,
        critic1_opt,
        critic2_opt,
    } = &mut agent.nets
    else {
        return Err(Error::contract("learn_step_td3 on a non-TD3 agent"));
    };

    let targets = batch
        .iter()
        .map(|t| {
            td3_target(
                actor_target,
                critic1_target,
                critic2_target,
                t,
                hp.gamma,
                hp.target_noise,
                hp.noise_clip,
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let loss1 = critic_td_step(critic1, critic1_opt, &batch, &targets)?;
    let loss2 = critic_td_step(critic2, critic2_opt, &batch, &targets)?;

    agent.learn_counter += 1;
    let mut actor_objective = None;
    if agent.learn_counter % hp.policy_delay == 0 {
        let obs_width = actor.input_width();
        let mut samples = Vec::with_capacity(batch.len());
        let mut objective = 0.0;
        let mut scratch = Gradient::zeros_like(critic1);
        for t in batch.iter() {
            let action = scaled_actor_output(actor, &t.obs)?;
            let trace = critic1.forward_trace(&concat_obs_action(&t.obs, &action))?;
            objective += trace.output()[0] / batch.len() as f64;
            let input_grad = critic1.backward_from_trace(&trace, &[1.0], &mut scratch)?;
            samples.push((t.obs.clone(), [input_grad[obs_width], input_grad[obs_width + 1]]));
        }
        actor_ascent_step(actor, actor_opt, &samples)?;
        soft_update(actor, actor_target, hp.tau)?;
        soft_update(critic1, critic1_target, hp.tau)?;
        soft_update(critic2, critic2_target, hp.tau)?;
        actor_objective = Some(objective);
    }
    Ok(Td3Losses {
        critic1: loss1,
        critic2: loss2,
        actor_objective,
    })
}

/// One learning iteration of whichever algorithm the agent runs; returns the
/// (mean critic) loss for metrics.
pub fn learn_step<R: Rng + ?Sized>(
    agent: &mut Agent,
    buffer: &ReplayBuffer<Transition>,
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    match agent.algorithm() {
        super::Algorithm::Dqn | super::Algorithm::Ddqn => learn_step_q(agent, buffer, hp, rng),
        super::Algorithm::Ddpg => learn_step_ddpg(agent, buffer, hp, rng).map(|(c, _)| c),
        super::Algorithm::Td3 => {
            learn_step_td3(agent, buffer, hp, rng).map(|l| 0.5 * (l.critic1 + l.critic2))
        }
    }
}

fn critic_td_step(
    critic: &mut Mlp,
    opt: &mut AdamState,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<f64> {
    let mut grad = Gradient::zeros_like(critic);
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let action = transition_action(t)?;
        let trace = critic.forward_trace(&concat_obs_action(&t.obs, &action))?;
        let q = trace.output()[0];
        critic.backward_from_trace(&trace, &[2.0 * (q - y) * inv_b], &mut grad)?;
        loss += (q - y) * (q - y) * inv_b;
    }
    adam_step(critic, opt, &grad)?;
    Ok(loss)
}

fn scaled_actor_output(actor: &Mlp, obs: &[f64]) -> Result<[f64; 2]> {
    let out = actor.forward(obs)?;
    Ok([out[0] * ACTION_LIMIT_CM_S, out[1] * ACTION_LIMIT_CM_S])
}

fn concat_obs_action(obs: &[f64], action: &[f64; 2]) -> Vec<f64> {
    let mut input = Vec::with_capacity(obs.len() + 2);
    input.extend_from_slice(obs);
    input.extend_from_slice(action);
    input
}

fn transition_action(t: &Transition) -> Result<[f64; 2]> {
    match t.action {
        Action::Continuous(a) => Ok(a),
        Action::Discrete(_) => Err(Error::contract("discrete transition in a critic batch")),
    }
}
