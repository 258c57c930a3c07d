//! The three coordination strategies against non-stationarity.
//!
//! - Implicit communication (IC): no messages; robots only feel each other
//!   through the rigid frame.
//! - Global knowledge (GK): every robot broadcasts its world position and
//!   velocity; each observer appends everyone else's values.
//! - Global state prediction (GSP): robots broadcast one number each (their
//!   mean proximity); a network maps the broadcast vector to the aggregate's
//!   next orientation change, and the prediction is appended to every
//!   robot's observation.

mod gsp;
mod probe;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Observation, Vec2, WorldState, OBSERVATION_WIDTH};

pub use gsp::{
    gsp_predict, gsp_reward, gsp_specs, gsp_train_step, GspDdpgParts, GspRecord, GspState,
    GspTraining, GSP_HIDDEN_DEFAULT,
};
pub use probe::{probe_gsp, write_probe_csv, write_probe_csv_file, ProbeRow, ProbeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinationMode {
    Ic,
    Gk,
    Gsp,
}

impl CoordinationMode {
    /// How many entries the mode appends to the 31-entry base observation.
    pub fn augmentation_width(&self, n_robots: usize) -> usize {
        match self {
            CoordinationMode::Ic => 0,
            CoordinationMode::Gk => 4 * n_robots.saturating_sub(1),
            CoordinationMode::Gsp => 1,
        }
    }

    pub fn policy_input_width(&self, n_robots: usize) -> usize {
        OBSERVATION_WIDTH + self.augmentation_width(n_robots)
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            CoordinationMode::Ic => 0,
            CoordinationMode::Gk => 1,
            CoordinationMode::Gsp => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(CoordinationMode::Ic),
            1 => Some(CoordinationMode::Gk),
            2 => Some(CoordinationMode::Gsp),
            _ => None,
        }
    }
}

impl std::fmt::Display for CoordinationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CoordinationMode::Ic => "ic",
            CoordinationMode::Gk => "gk",
            CoordinationMode::Gsp => "gsp",
        };
        write!(f, "{name}")
    }
}

/// Mean of the 24 proximity readings — the single number a robot broadcasts
/// under GSP.
pub fn mean_proximity(obs: &Observation) -> f64 {
    obs.mean_proximity()
}

/// The GK broadcast from robot `robot_index`'s point of view: world position
/// and finite-difference velocity of every *other* robot, fixed index order,
/// flattened `(x, y, vx, vy)` per robot. Failed robots broadcast zeros so the
/// packet width never changes.
pub fn build_gk_augmentation(world: &WorldState, robot_index: usize) -> Vec<f64> {
    let n = world.aggregate.robots.len();
    let dt = world.config.step_duration;
    let mut packet = Vec::with_capacity(4 * n.saturating_sub(1));
    for j in 0..n {
        if j == robot_index {
            continue;
        }
        let robot = &world.aggregate.robots[j];
        if robot.failed {
            packet.extend_from_slice(&[0.0; 4]);
            continue;
        }
        let pos = world.aggregate.robot_position(j);
        let prev = prev_robot_position(world, j);
        let vel = if world.step_index == 0 {
            Vec2::ZERO
        } else {
            (pos - prev) * (1.0 / dt)
        };
        packet.extend_from_slice(&[pos.x, pos.y, vel.x, vel.y]);
    }
    packet
}

fn prev_robot_position(world: &WorldState, j: usize) -> Vec2 {
    let robot = &world.aggregate.robots[j];
    let offset = Vec2::from_angle(world.prev_pose.theta + robot.attachment_angle)
        * robot.attachment_radius;
    world.prev_pose.position() + offset
}

/// The per-step GSP broadcast: one mean-proximity value per robot slot,
/// zeros for failed robots. `attached`/`observations` come from the same
/// step, index-aligned.
pub fn proximity_broadcast(
    n_robots: usize,
    attached: &[usize],
    observations: &[Observation],
) -> Vec<f64> {
    let mut broadcast = vec![0.0; n_robots];
    for (&i, obs) in attached.iter().zip(observations) {
        broadcast[i] = obs.mean_proximity();
    }
    broadcast
}

/// Appends the mode's extra entries to a base observation. IC expects no
/// extra data, GK the flattened packet, GSP exactly the one prediction.
pub fn augment(obs: &Observation, mode: CoordinationMode, extra: &[f64]) -> Result<Vec<f64>> {
    let mut v = obs.to_vec();
    match mode {
        CoordinationMode::Ic => {
            if !extra.is_empty() {
                return Err(Error::config("IC takes no augmentation"));
            }
        }
        CoordinationMode::Gk => {
            if extra.is_empty() || extra.len() % 4 != 0 {
                return Err(Error::config(format!(
                    "GK augmentation of length {} is not 4*(N-1)",
                    extra.len()
                )));
            }
            v.extend_from_slice(extra);
        }
        CoordinationMode::Gsp => {
            if extra.len() != 1 {
                return Err(Error::config("GSP appends exactly one prediction"));
            }
            v.extend_from_slice(extra);
        }
    }
    Ok(v)
}
