//! DQN, DDQN, DDPG, and TD3 over a shared replay buffer, plus the A-CTDE
//! episode loop and agent checkpoints.

mod action;
mod agent;
mod checkpoint;
mod episode;
mod hyper;
mod learn;
mod replay;

pub use action::{Action, ActionCodec};
pub use agent::{
    actor_specs, argmax_lowest, critic_specs, q_network_specs, select_action_continuous,
    select_action_discrete, Agent, AgentNets, Algorithm,
};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file, Checkpoint,
};
pub use episode::{run_episode_actde, CoordinationRuntime, EpisodeReport};
pub use hyper::{epsilon, Hyperparams};
pub use learn::{
    actor_ascent_step, ddpg_target, ddqn_target, dqn_target, learn_step, learn_step_ddpg,
    learn_step_q, learn_step_td3, td3_target, Td3Losses,
};
pub use replay::{ReplayBuffer, Transition};
