//! Training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything the four algorithms need. Defaults follow the deep Q-learning
/// lineage for the discrete methods and the standard DDPG/TD3 constants for
/// the continuous ones; the noise scales are expressed in cm/s to match the
/// wheel-delta action box of half-width 0.1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub gamma: f64,
    /// Q-network learning rate.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub eps_start: f64,
    /// Linear epsilon decay per action selection.
    pub eps_decay: f64,
    pub eps_min: f64,
    /// Hard target sync period, learning iterations (DQN/DDQN).
    pub target_sync_every: u64,
    /// Polyak factor for DDPG/TD3 targets.
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Gaussian exploration noise for continuous actors, cm/s.
    pub exploration_noise: f64,
    /// TD3: actor/target update period, learning iterations.
    pub policy_delay: u64,
    /// TD3: target policy smoothing sigma, cm/s.
    pub target_noise: f64,
    /// TD3: smoothing noise clip, cm/s.
    pub noise_clip: f64,
    /// Hidden widths of the Q networks.
    pub q_hidden: [usize; 2],
    /// Hidden widths of actors and critics.
    pub actor_hidden: [usize; 2],
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99997,
            learning_rate: 1e-4,
            batch_size: 100,
            replay_capacity: 1_000_000,
            eps_start: 1.0,
            eps_decay: 1e-6,
            eps_min: 0.01,
            target_sync_every: 1000,
            tau: 0.001,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            exploration_noise: 0.01,
            policy_delay: 2,
            target_noise: 0.02,
            noise_clip: 0.05,
            q_hidden: [64, 128],
            actor_hidden: [400, 300],
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma must lie in (0, 1)"));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(Error::config(
                "replay capacity must hold at least one batch",
            ));
        }
        if !(self.eps_min <= self.eps_start && self.eps_min >= 0.0 && self.eps_start <= 1.0) {
            return Err(Error::config("need 0 <= eps_min <= eps_start <= 1"));
        }
        if self.target_sync_every == 0 || self.policy_delay == 0 {
            return Err(Error::config("update periods must be >= 1"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0, 1]"));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
        ] {
            if v <= 0.0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.q_hidden.iter().chain(&self.actor_hidden).any(|&w| w == 0) {
            return Err(Error::config("hidden widths must be >= 1"));
        }
        Ok(())
    }

    /// Linear epsilon schedule after `count` action selections.
    pub fn epsilon(&self, count: u64) -> f64 {
        (self.eps_start - self.eps_decay * count as f64).max(self.eps_min)
    }
}

/// The default schedule: `max(0.01, 1.0 - 1e-6 * count)`.
pub fn epsilon(action_selections_so_far: u64) -> f64 {
    Hyperparams::default().epsilon(action_selections_so_far)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule_is_exact() {
        assert_eq!(epsilon(0), 1.0);
        assert_eq!(epsilon(500_000), 0.5);
        assert_eq!(epsilon(1_000_000_000), 0.01);
    }

    #[test]
    fn defaults_validate() {
        Hyperparams::default().validate().unwrap();
    }

    #[test]
    fn bad_gamma_is_rejected() {
        let hp = Hyperparams {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(hp.validate().is_err());
    }
}
