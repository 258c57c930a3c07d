//! Single-file agent checkpoints.
//!
//! Layout: a small header (algorithm, coordination mode, robot count,
//! observation width, config hash, counters), then every network in a fixed
//! per-variant order via the weight format, then the optimizer states, then
//! an optional prediction-network block for GSP checkpoints. Little-endian
//! throughout; load verifies magic, version, and width consistency.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::agent::{Agent, AgentNets, Algorithm};
use crate::coord::{CoordinationMode, GspState, GspTraining};
use crate::error::{Error, Result};
use crate::nn::{load_mlp, save_mlp, AdamState, Gradient, Mlp};
use crate::rl::ReplayBuffer;

const MAGIC: &[u8; 4] = b"AGTC";
const VERSION: u32 = 1;

/// Everything needed to resume evaluation: the agent, what it was trained
/// for, and (under GSP) the prediction network.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub algorithm: Algorithm,
    pub mode: CoordinationMode,
    pub n_robots: usize,
    pub obs_width: usize,
    pub config_hash: u64,
    pub agent: Agent,
    pub gsp: Option<GspState>,
}

pub fn save_checkpoint<W: Write>(checkpoint: &Checkpoint, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[checkpoint.algorithm.tag(), checkpoint.mode.tag()])?;
    out.write_all(&(checkpoint.n_robots as u32).to_le_bytes())?;
    out.write_all(&(checkpoint.obs_width as u32).to_le_bytes())?;
    out.write_all(&checkpoint.config_hash.to_le_bytes())?;
    out.write_all(&checkpoint.agent.learn_counter.to_le_bytes())?;
    out.write_all(&checkpoint.agent.action_selections.to_le_bytes())?;

    match &checkpoint.agent.nets {
        AgentNets::Dqn { online, target, opt } | AgentNets::Ddqn { online, target, opt } => {
            save_mlp(online, out)?;
            save_mlp(target, out)?;
            write_adam(opt, out)?;
        }
        AgentNets::Ddpg {
            actor,
            actor_target,
            critic,
            critic_target,
            actor_opt,
            critic_opt,
        } => {
            for net in [actor, actor_target, critic, critic_target] {
                save_mlp(net, out)?;
            }
            write_adam(actor_opt, out)?;
            write_adam(critic_opt, out)?;
        }
        AgentNets::Td3 {
            actor,
            actor_target,
            critic1,
            critic2,
            critic1_target,
            critic2_target,
            actor_opt,
            critic1_opt,
            critic2_opt,
        } => {
            for net in [
                actor,
                actor_target,
                critic1,
                critic2,
                critic1_target,
                critic2_target,
            ] {
                save_mlp(net, out)?;
            }
            write_adam(actor_opt, out)?;
            write_adam(critic1_opt, out)?;
            write_adam(critic2_opt, out)?;
        }
    }

    match &checkpoint.gsp {
        None => out.write_all(&[0u8])?,
        Some(gsp) => {
            out.write_all(&[1u8, gsp.training.tag()])?;
            out.write_all(&(gsp.n_robots as u32).to_le_bytes())?;
            save_mlp(&gsp.net, out)?;
            write_adam(&gsp.opt, out)?;
            match gsp.ddpg_parts() {
                None => out.write_all(&[0u8])?,
                Some(parts) => {
                    out.write_all(&[1u8])?;
                    save_mlp(parts.actor_target, out)?;
                    save_mlp(parts.critic, out)?;
                    save_mlp(parts.critic_target, out)?;
                    write_adam(parts.critic_opt, out)?;
                }
            }
        }
    }
    Ok(())
}

pub fn load_checkpoint<R: Read>(input: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("bad magic; not a checkpoint"));
    }
    if read_u32(input)? != VERSION {
        return Err(Error::format("unsupported checkpoint version"));
    }
    let mut tags = [0u8; 2];
    input.read_exact(&mut tags)?;
    let algorithm = Algorithm::from_tag(tags[0])
        .ok_or_else(|| Error::format(format!("unknown algorithm tag {}", tags[0])))?;
    let mode = CoordinationMode::from_tag(tags[1])
        .ok_or_else(|| Error::format(format!("unknown mode tag {}", tags[1])))?;
    let n_robots = read_u32(input)? as usize;
    let obs_width = read_u32(input)? as usize;
    let config_hash = read_u64(input)?;
    let learn_counter = read_u64(input)?;
    let action_selections = read_u64(input)?;

    let nets = match algorithm {
        Algorithm::Dqn | Algorithm::Ddqn => {
            let online = load_mlp(input)?;
            let target = load_mlp(input)?;
            let opt = read_adam(input, &online)?;
            check_widths(&online, obs_width)?;
            if algorithm == Algorithm::Dqn {
                AgentNets::Dqn { online, target, opt }
            } else {
                AgentNets::Ddqn { online, target, opt }
            }
        }
        Algorithm::Ddpg => {
            let actor = load_mlp(input)?;
            let actor_target = load_mlp(input)?;
            let critic = load_mlp(input)?;
            let critic_target = load_mlp(input)?;
            let actor_opt = read_adam(input, &actor)?;
            let critic_opt = read_adam(input, &critic)?;
            check_widths(&actor, obs_width)?;
            AgentNets::Ddpg {
                actor,
                actor_target,
                critic,
                critic_target,
                actor_opt,
                critic_opt,
            }
        }
        Algorithm::Td3 => {
            let actor = load_mlp(input)?;
            let actor_target = load_mlp(input)?;
            let critic1 = load_mlp(input)?;
            let critic2 = load_mlp(input)?;
            let critic1_target = load_mlp(input)?;
            let critic2_target = load_mlp(input)?;
            let actor_opt = read_adam(input, &actor)?;
            let critic1_opt = read_adam(input, &critic1)?;
            let critic2_opt = read_adam(input, &critic2)?;
            check_widths(&actor, obs_width)?;
            AgentNets::Td3 {
                actor,
                actor_target,
                critic1,
                critic2,
                critic1_target,
                critic2_target,
                actor_opt,
                critic1_opt,
                critic2_opt,
            }
        }
    };

    let mut flag = [0u8; 1];
    input.read_exact(&mut flag)?;
    let gsp = if flag[0] == 0 {
        None
    } else {
        let mut training_tag = [0u8; 1];
        input.read_exact(&mut training_tag)?;
        let training = GspTraining::from_tag(training_tag[0])
            .ok_or_else(|| Error::format("unknown GSP training tag"))?;
        let gsp_robots = read_u32(input)? as usize;
        let net = load_mlp(input)?;
        let opt = read_adam(input, &net)?;
        let mut ddpg_flag = [0u8; 1];
        input.read_exact(&mut ddpg_flag)?;
        let ddpg = if ddpg_flag[0] == 0 {
            None
        } else {
            let actor_target = load_mlp(input)?;
            let critic = load_mlp(input)?;
            let critic_target = load_mlp(input)?;
            let critic_opt = read_adam(input, &critic)?;
            Some((actor_target, critic, critic_target, critic_opt))
        };
        Some(GspState::from_saved_parts(
            gsp_robots,
            net,
            opt,
            training,
            ddpg,
            ReplayBuffer::new(1_000_000),
        ))
    };

    Ok(Checkpoint {
        algorithm,
        mode,
        n_robots,
        obs_width,
        config_hash,
        agent: Agent {
            nets,
            learn_counter,
            action_selections,
        },
        gsp,
    })
}

pub fn save_checkpoint_file<P: AsRef<Path>>(checkpoint: &Checkpoint, path: P) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    save_checkpoint(checkpoint, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint_file<P: AsRef<Path>>(path: P) -> Result<Checkpoint> {
    let mut input = BufReader::new(File::open(path)?);
    load_checkpoint(&mut input)
}

fn check_widths(policy_net: &Mlp, obs_width: usize) -> Result<()> {
    if policy_net.input_width() != obs_width {
        return Err(Error::format(format!(
            "checkpoint header width {obs_width} != stored network width {}",
            policy_net.input_width()
        )));
    }
    Ok(())
}

fn write_adam<W: Write>(state: &AdamState, out: &mut W) -> Result<()> {
    for v in [
        state.learning_rate,
        state.beta1,
        state.beta2,
        state.epsilon,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&state.step_count.to_le_bytes())?;
    for grad in [&state.first_moment, &state.second_moment] {
        for layer in grad.d_weights.iter().chain(grad.d_biases.iter()) {
            for v in layer {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_adam<R: Read>(input: &mut R, net: &Mlp) -> Result<AdamState> {
    let learning_rate = read_f64(input)?;
    let beta1 = read_f64(input)?;
    let beta2 = read_f64(input)?;
    let epsilon = read_f64(input)?;
    let step_count = read_u64(input)?;
    let mut state = AdamState::with_constants(net, learning_rate, beta1, beta2, epsilon)?;
    state.step_count = step_count;
    for grad in [&mut state.first_moment, &mut state.second_moment] {
        read_gradient(input, grad)?;
    }
    Ok(state)
}

fn read_gradient<R: Read>(input: &mut R, grad: &mut Gradient) -> Result<()> {
    for layer in grad.d_weights.iter_mut().chain(grad.d_biases.iter_mut()) {
        for v in layer {
            *v = read_f64(input)?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
