//! The shared policy: one parameter set queried once per robot per step.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::action::{Action, ActionCodec};
use super::hyper::Hyperparams;
use crate::error::{Error, Result};
use crate::nn::{AdamState, Activation, LayerSpec, Mlp};
use crate::sim::ACTION_LIMIT_CM_S;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dqn,
    Ddqn,
    Ddpg,
    Td3,
}

impl Algorithm {
    pub fn is_discrete(self) -> bool {
        matches!(self, Algorithm::Dqn | Algorithm::Ddqn)
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Algorithm::Dqn => 0,
            Algorithm::Ddqn => 1,
            Algorithm::Ddpg => 2,
            Algorithm::Td3 => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Algorithm::Dqn),
            1 => Some(Algorithm::Ddqn),
            2 => Some(Algorithm::Ddpg),
            3 => Some(Algorithm::Td3),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::Dqn => "dqn",
            Algorithm::Ddqn => "ddqn",
            Algorithm::Ddpg => "ddpg",
            Algorithm::Td3 => "td3",
        };
        write!(f, "{name}")
    }
}

/// Networks and optimizer state per algorithm. Target networks only ever
/// change through hard or soft copies.
#[derive(Debug, Clone)]
pub enum AgentNets {
    Dqn {
        online: Mlp,
        target: Mlp,
        opt: AdamState,
    },
    Ddqn {
        online: Mlp,
        target: Mlp,
        opt: AdamState,
    },
    Ddpg {
        actor: Mlp,
        actor_target: Mlp,
        critic: Mlp,
        critic_target: Mlp,
        actor_opt: AdamState,
        critic_opt: AdamState,
    },
    Td3 {
        actor: Mlp,
        actor_target: Mlp,
        critic1: Mlp,
        critic2: Mlp,
        critic1_target: Mlp,
        critic2_target: Mlp,
        actor_opt: AdamState,
        critic1_opt: AdamState,
        critic2_opt: AdamState,
    },
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub nets: AgentNets,
    /// Completed learning iterations.
    pub learn_counter: u64,
    /// Policy queries made during training; drives the epsilon schedule.
    pub action_selections: u64,
}

/// Q-net stack: obs -> hidden -> hidden -> 9 action values.
pub fn q_network_specs(obs_width: usize, hidden: [usize; 2]) -> Vec<LayerSpec> {
    LayerSpec::chain(
        &[obs_width, hidden[0], hidden[1], ActionCodec::COUNT],
        Activation::ReLU,
        Activation::Identity,
    )
}

/// Actor stack: obs -> hidden -> hidden -> 2 wheel deltas, tanh-squashed.
pub fn actor_specs(obs_width: usize, hidden: [usize; 2]) -> Vec<LayerSpec> {
    LayerSpec::chain(
        &[obs_width, hidden[0], hidden[1], 2],
        Activation::ReLU,
        Activation::Tanh,
    )
}

/// Critic stack: (obs, action) -> hidden -> hidden -> scalar value.
pub fn critic_specs(obs_width: usize, action_width: usize, hidden: [usize; 2]) -> Vec<LayerSpec> {
    LayerSpec::chain(
        &[obs_width + action_width, hidden[0], hidden[1], 1],
        Activation::ReLU,
        Activation::Identity,
    )
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        algorithm: Algorithm,
        obs_width: usize,
        hp: &Hyperparams,
        rng: &mut R,
    ) -> Result<Agent> {
        hp.validate()?;
        let nets = match algorithm {
            Algorithm::Dqn | Algorithm::Ddqn => {
                let online = Mlp::new(&q_network_specs(obs_width, hp.q_hidden), rng)?;
                let target = online.clone();
                let opt = AdamState::new(&online, hp.learning_rate);
                if algorithm == Algorithm::Dqn {
                    AgentNets::Dqn { online, target, opt }
                } else {
                    AgentNets::Ddqn { online, target, opt }
                }
            }
            Algorithm::Ddpg => {
                let actor = Mlp::new(&actor_specs(obs_width, hp.actor_hidden), rng)?;
                let critic = Mlp::new(&critic_specs(obs_width, 2, hp.actor_hidden), rng)?;
                AgentNets::Ddpg {
                    actor_target: actor.clone(),
                    critic_target: critic.clone(),
                    actor_opt: AdamState::new(&actor, hp.actor_lr),
                    critic_opt: AdamState::new(&critic, hp.critic_lr),
                    actor,
                    critic,
                }
            }
            Algorithm::Td3 => {
                let actor = Mlp::new(&actor_specs(obs_width, hp.actor_hidden), rng)?;
                let critic1 = Mlp::new(&critic_specs(obs_width, 2, hp.actor_hidden), rng)?;
                let critic2 = Mlp::new(&critic_specs(obs_width, 2, hp.actor_hidden), rng)?;
                AgentNets::Td3 {
                    actor_target: actor.clone(),
                    critic1_target: critic1.clone(),
                    critic2_target: critic2.clone(),
                    actor_opt: AdamState::new(&actor, hp.actor_lr),
                    critic1_opt: AdamState::new(&critic1, hp.critic_lr),
                    critic2_opt: AdamState::new(&critic2, hp.critic_lr),
                    actor,
                    critic1,
                    critic2,
                }
            }
        };
        Ok(Agent {
            nets,
            learn_counter: 0,
            action_selections: 0,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.nets {
            AgentNets::Dqn { .. } => Algorithm::Dqn,
            AgentNets::Ddqn { .. } => Algorithm::Ddqn,
            AgentNets::Ddpg { .. } => Algorithm::Ddpg,
            AgentNets::Td3 { .. } => Algorithm::Td3,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.algorithm().is_discrete()
    }

    /// Width of the observation vector the policy expects.
    pub fn obs_width(&self) -> usize {
        match &self.nets {
            AgentNets::Dqn { online, .. } | AgentNets::Ddqn { online, .. } => online.input_width(),
            AgentNets::Ddpg { actor, .. } | AgentNets::Td3 { actor, .. } => actor.input_width(),
        }
    }

    /// Value hash of the decision-making parameters (online Q net or actor).
    pub fn policy_hash(&self) -> u64 {
        match &self.nets {
            AgentNets::Dqn { online, .. } | AgentNets::Ddqn { online, .. } => online.value_hash(),
            AgentNets::Ddpg { actor, .. } | AgentNets::Td3 { actor, .. } => actor.value_hash(),
        }
    }

    /// Q values over the 9 discrete actions.
    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        match &self.nets {
            AgentNets::Dqn { online, .. } | AgentNets::Ddqn { online, .. } => online.forward(obs),
            _ => Err(Error::contract("q_values on a continuous agent")),
        }
    }

    /// Deterministic actor output scaled into the action box, cm/s.
    pub fn actor_action(&self, obs: &[f64]) -> Result<[f64; 2]> {
        match &self.nets {
            AgentNets::Ddpg { actor, .. } | AgentNets::Td3 { actor, .. } => {
                let out = actor.forward(obs)?;
                Ok([out[0] * ACTION_LIMIT_CM_S, out[1] * ACTION_LIMIT_CM_S])
            }
            _ => Err(Error::contract("actor_action on a discrete agent")),
        }
    }

    /// Exploitation-only action (greedy argmax / noiseless actor).
    pub fn greedy_action(&self, obs: &[f64]) -> Result<Action> {
        if self.is_discrete() {
            Ok(Action::Discrete(argmax_lowest(&self.q_values(obs)?)))
        } else {
            Ok(Action::Continuous(self.actor_action(obs)?))
        }
    }
}

/// Index of the maximum, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy over the 9 discrete actions.
pub fn select_action_discrete<R: Rng + ?Sized>(
    agent: &Agent,
    obs: &[f64],
    eps: f64,
    rng: &mut R,
) -> Result<usize> {
    if !agent.is_discrete() {
        return Err(Error::contract("discrete selection on a continuous agent"));
    }
    if rng.gen::<f64>() < eps {
        Ok(rng.gen_range(0..ActionCodec::COUNT))
    } else {
        Ok(argmax_lowest(&agent.q_values(obs)?))
    }
}

/// Actor output, optionally with additive Gaussian exploration noise
/// (`sigma` in cm/s), clamped to the action box.
pub fn select_action_continuous<R: Rng + ?Sized>(
    agent: &Agent,
    obs: &[f64],
    explore: bool,
    sigma: f64,
    rng: &mut R,
) -> Result<[f64; 2]> {
    let mut action = agent.actor_action(obs)?;
    if explore {
        let normal = Normal::new(0.0, sigma)
            .map_err(|_| Error::config("exploration noise sigma must be non-negative"))?;
        for a in &mut action {
            *a = (*a + normal.sample(rng)).clamp(-ACTION_LIMIT_CM_S, ACTION_LIMIT_CM_S);
        }
    }
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn tiny_hp() -> Hyperparams {
        Hyperparams {
            q_hidden: [8, 8],
            actor_hidden: [8, 8],
            ..Default::default()
        }
    }

    #[test]
    fn greedy_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax_lowest(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax_lowest(&[5.0; 9]), 0);
    }

    #[test]
    fn eps_zero_is_deterministic_argmax() {
        let hp = tiny_hp();
        let agent = Agent::new(Algorithm::Dqn, 31, &hp, &mut rng_from_seed(1)).unwrap();
        let obs = vec![0.1; 31];
        let expect = argmax_lowest(&agent.q_values(&obs).unwrap());
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            assert_eq!(
                select_action_discrete(&agent, &obs, 0.0, &mut rng).unwrap(),
                expect
            );
        }
    }

    #[test]
    fn eps_one_is_uniform_within_three_sigma() {
        let hp = tiny_hp();
        let agent = Agent::new(Algorithm::Ddqn, 31, &hp, &mut rng_from_seed(1)).unwrap();
        let obs = vec![0.0; 31];
        let mut rng = rng_from_seed(3);
        let draws = 90_000;
        let mut counts = [0usize; 9];
        for _ in 0..draws {
            counts[select_action_discrete(&agent, &obs, 1.0, &mut rng).unwrap()] += 1;
        }
        let expected = draws as f64 / 9.0;
        let sigma = (draws as f64 * (1.0 / 9.0) * (8.0 / 9.0)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expected).abs() < 3.0 * sigma,
                "count {c} vs expected {expected}"
            );
        }
    }

    #[test]
    fn continuous_actions_stay_in_the_box() {
        let hp = tiny_hp();
        let agent = Agent::new(Algorithm::Td3, 31, &hp, &mut rng_from_seed(4)).unwrap();
        let mut rng = rng_from_seed(5);
        for trial in 0..200 {
            let obs: Vec<f64> = (0..31).map(|k| ((trial * 31 + k) as f64).sin()).collect();
            let a = select_action_continuous(&agent, &obs, true, 0.05, &mut rng).unwrap();
            assert!(a.iter().all(|v| v.abs() <= ACTION_LIMIT_CM_S));
        }
    }

    #[test]
    fn greedy_continuous_is_deterministic() {
        let hp = tiny_hp();
        let agent = Agent::new(Algorithm::Ddpg, 31, &hp, &mut rng_from_seed(6)).unwrap();
        let obs = vec![0.3; 31];
        let mut rng = rng_from_seed(7);
        let a = select_action_continuous(&agent, &obs, false, 0.05, &mut rng).unwrap();
        let b = select_action_continuous(&agent, &obs, false, 0.05, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exploration_noise_magnitude_matches_folded_normal() {
        // mean |noise| = sigma * sqrt(2/pi) when the clamp never bites.
        let hp = tiny_hp();
        let mut agent = Agent::new(Algorithm::Ddpg, 4, &hp, &mut rng_from_seed(8)).unwrap();
        // Zero the actor so greedy output is 0 (far from the box edges).
        if let AgentNets::Ddpg { actor, .. } = &mut agent.nets {
            let zero = Mlp::from_parts(
                &actor.specs(),
                actor
                    .specs()
                    .iter()
                    .map(|s| vec![0.0; s.input_width * s.output_width])
                    .collect(),
                actor.specs().iter().map(|s| vec![0.0; s.output_width]).collect(),
            )
            .unwrap();
            *actor = zero;
        }
        let obs = vec![0.0; 4];
        let sigma = 0.01;
        let mut rng = rng_from_seed(9);
        let draws = 100_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let a = select_action_continuous(&agent, &obs, true, sigma, &mut rng).unwrap();
            total += a[0].abs() + a[1].abs();
        }
        let mean = total / (2.0 * draws as f64);
        let expect = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (mean - expect).abs() < 0.05 * expect,
            "mean {mean} vs {expect}"
        );
    }

    #[test]
    fn wrong_family_selection_is_rejected() {
        let hp = tiny_hp();
        let dqn = Agent::new(Algorithm::Dqn, 31, &hp, &mut rng_from_seed(1)).unwrap();
        let td3 = Agent::new(Algorithm::Td3, 31, &hp, &mut rng_from_seed(1)).unwrap();
        let obs = vec![0.0; 31];
        let mut rng = rng_from_seed(2);
        assert!(select_action_continuous(&dqn, &obs, false, 0.01, &mut rng).is_err());
        assert!(select_action_discrete(&td3, &obs, 0.5, &mut rng).is_err());
    }
}
