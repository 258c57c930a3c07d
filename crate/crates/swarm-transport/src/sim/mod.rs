//! 2D simulation of the collective-transport task.
//!
//! An arena of three left-to-right zones (aggregate generation, obstacle
//! generation, goal), a rigid aggregate of differential-drive robots gripped
//! around the object, ray-cast proximity sensing, a dense transport reward,
//! gate curriculum, and robot-failure injection.

mod aggregate;
mod config;
mod curriculum;
mod failure;
mod geom;
mod obstacle;
mod trajectory;
mod world;

pub use aggregate::{
    resolve_aggregate_twist, Aggregate, Robot, TwistSolution, WHEEL_SPEED_LIMIT_CM_S,
};
pub use config::WorldConfig;
pub use curriculum::curriculum_gate_width;
pub use failure::sample_failure_schedule;
pub use geom::{wrap_angle, Pose, Rect, Vec2};
pub use obstacle::{Obstacle, ObstacleSuite};
pub use trajectory::{read_trajectory, TrajectoryRow, TrajectoryWriter};
pub use world::{
    reward, reward_value, Observation, StepOutcome, WorldState, ACTION_LIMIT_CM_S,
    OBSERVATION_WIDTH, PROXIMITY_RANGE_M, PROXIMITY_RAYS,
};
