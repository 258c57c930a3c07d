//! Collective-transport workbench.
//!
//! A rigid aggregate of differential-drive robots, gripped around an object,
//! learns to push it across an obstacle field to a goal zone. One policy is
//! trained centrally from every robot's local experiences in a shared replay
//! buffer, then queried once per robot per step (aggregate centralized
//! training, decentralized execution).
//!
//! The crate is organized in five layers:
//!
//! - [`nn`] — from-scratch feed-forward networks: forward, exact reverse-mode
//!   backprop, Adam, target-network copies, and a binary weight format.
//! - [`sim`] — the 2D transport world: arena zones, rigid-aggregate kinematics
//!   resolved by least squares, ray-cast proximity sensing, reward, curriculum,
//!   and robot-failure injection.
//! - [`rl`] — DQN, DDQN, DDPG, and TD3 over a shared replay buffer, plus the
//!   per-episode training/evaluation loop.
//! - [`coord`] — the three coordination strategies: implicit communication
//!   (none), global knowledge (broadcast poses and velocities), and global
//!   state prediction (a network mapping broadcast mean-proximity values to
//!   the aggregate's next orientation change).
//! - [`harness`] — batch experiment front-end: seeded training/evaluation
//!   campaigns, CSV/JSON outputs, checkpoints, probe and replay tools.
//!
//! The `examples/` directory holds one runnable example per capability; the
//! `swarm-transport` binary exposes the same entry points as subcommands.

pub mod coord;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
