//! World state and the step function.
//!
//! One step: scheduled failures fire, wheel speeds integrate the commanded
//! deltas, the rigid twist is resolved from all attached robots, the
//! aggregate moves (sliding along contacts, never penetrating), and every
//! attached robot receives its local observation and reward.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::aggregate::{resolve_aggregate_twist, Aggregate};
use super::config::WorldConfig;
use super::geom::{ray_circle, ray_rect_enter, ray_rect_exit, wrap_angle, Pose, Rect, Vec2};
use super::obstacle::{Obstacle, ObstacleSuite};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const PROXIMITY_RAYS: usize = 24;
pub const PROXIMITY_RANGE_M: f64 = 2.0;
/// Width of the un-augmented observation vector.
pub const OBSERVATION_WIDTH: usize = 31;
/// Wheel-speed deltas are capped at this magnitude, cm/s per step.
pub const ACTION_LIMIT_CM_S: f64 = 0.1;

/// Collision acceptance slack; accepted poses may overlap surfaces by at most
/// this much, well under the 1e-6 m soundness budget.
const CONTACT_TOL: f64 = 1e-9;

/// A robot's local view: everything is expressed in its own body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Robot to goal-zone center, m.
    pub robot_to_goal: [f64; 2],
    /// Robot to object center, m.
    pub robot_to_object: [f64; 2],
    /// Object center to goal-zone center, m.
    pub object_goal_distance: f64,
    /// Current wheel speeds, cm/s.
    pub wheel_speeds: [f64; 2],
    /// 24 ray readings in [0, 1]; ray k points at body angle 2*pi*k/24.
    pub proximity: [f64; PROXIMITY_RAYS],
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBSERVATION_WIDTH);
        v.extend_from_slice(&self.robot_to_goal);
        v.extend_from_slice(&self.robot_to_object);
        v.push(self.object_goal_distance);
        v.extend_from_slice(&self.wheel_speeds);
        v.extend_from_slice(&self.proximity);
        v
    }

    pub fn mean_proximity(&self) -> f64 {
        self.proximity.iter().sum::<f64>() / PROXIMITY_RAYS as f64
    }
}

/// What one step returns; vectors are per *attached* robot, index order.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub success: bool,
    /// Realized aggregate orientation change this step, wrapped.
    pub aggregate_dtheta: f64,
}

/// Full simulator state.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub config: WorldConfig,
    pub aggregate: Aggregate,
    pub obstacles: Vec<Obstacle>,
    pub step_index: usize,
    /// Object position one step earlier (current position at step 0).
    pub prev_object_pos: Vec2,
    /// Aggregate pose one step earlier (current pose at step 0).
    pub prev_pose: Pose,
    pub goal_center: Vec2,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// Fresh episode: object pose uniform over the generation zone (inset so
    /// the aggregate fits inside the arena), robots equally spaced with a
    /// uniform random phase, obstacles drawn per suite. Placements that leave
    /// the aggregate overlapping an obstacle are rejected and redrawn.
    pub fn reset(
        config: &WorldConfig,
        suite: ObstacleSuite,
        n_robots: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if n_robots < 1 {
            return Err(Error::contract("need at least one robot"));
        }
        let mut rng = rng_from_seed(seed);

        let keep = config.aggregate_radius();
        let zone = config.robot_zone;
        let lo_x = zone.min.x.max(keep);
        let hi_x = zone.max.x.min(config.arena_width - keep);
        let lo_y = zone.min.y.max(keep);
        let hi_y = zone.max.y.min(config.arena_height - keep);
        if lo_x >= hi_x || lo_y >= hi_y {
            return Err(Error::generation(
                "robot generation zone cannot fit the aggregate",
            ));
        }

        const MAX_ATTEMPTS: usize = 1000;
        for _ in 0..MAX_ATTEMPTS {
            let pose = Pose::new(
                rng.gen_range(lo_x..hi_x),
                rng.gen_range(lo_y..hi_y),
                rng.gen_range(-PI..PI),
            );
            let aggregate =
                Aggregate::ring(pose, n_robots, config.attachment_radius, config.object_radius);
            let Some(obstacles) = sample_obstacles(config, suite, &mut rng) else {
                continue;
            };

            let state = WorldState {
                config: config.clone(),
                aggregate,
                obstacles,
                step_index: 0,
                prev_object_pos: pose.position(),
                prev_pose: pose,
                goal_center: config.goal_zone.center(),
                rng: rng.clone(),
            };
            if state.pose_collision_free(&pose) {
                return Ok(state);
            }
        }
        Err(Error::generation(
            "no feasible placement after bounded retries",
        ))
    }

    pub fn object_position(&self) -> Vec2 {
        self.aggregate.pose.position()
    }

    pub fn attached_indices(&self) -> Vec<usize> {
        self.aggregate.attached_indices()
    }

    /// Success: object center within `goal_tolerance` of the goal zone.
    pub fn success(&self) -> bool {
        self.config
            .goal_zone
            .distance_to_point(self.object_position())
            <= self.config.goal_tolerance
    }

    pub fn done(&self) -> bool {
        self.success() || self.step_index >= self.config.max_steps
    }

    /// Writes per-robot scheduled fail steps (`None` = never fails).
    pub fn set_failure_schedule(&mut self, schedule: &[Option<usize>]) -> Result<()> {
        if schedule.len() != self.aggregate.robots.len() {
            return Err(Error::contract(format!(
                "schedule length {} != {} robots",
                schedule.len(),
                self.aggregate.robots.len()
            )));
        }
        for (robot, &fail_time) in self.aggregate.robots.iter_mut().zip(schedule) {
            robot.fail_time = fail_time;
        }
        Ok(())
    }

    /// Disengages a robot: it vanishes from twist resolution, sensing, and
    /// the action loop for the rest of the episode.
    pub fn apply_failure(&mut self, robot_index: usize) -> Result<()> {
        let robot = self
            .aggregate
            .robots
            .get_mut(robot_index)
            .ok_or_else(|| Error::contract(format!("no robot {robot_index}")))?;
        if robot.failed {
            return Err(Error::contract(format!(
                "robot {robot_index} already failed"
            )));
        }
        robot.failed = true;
        if robot.fail_time.is_none() {
            robot.fail_time = Some(self.step_index);
        }
        robot.wheel_velocities = [0.0, 0.0];
        Ok(())
    }

    /// Advances one step. `actions` holds wheel-speed deltas (cm/s), one pair
    /// per robot attached at entry, index order; commands of robots whose
    /// scheduled failure fires this step are ignored.
    pub fn step(&mut self, actions: &[[f64; 2]]) -> Result<StepOutcome> {
        if self.step_index >= self.config.max_steps {
            return Err(Error::contract("episode already finished"));
        }
        let entry = self.aggregate.attached_indices();
        if actions.len() != entry.len() {
            return Err(Error::contract(format!(
                "{} actions for {} attached robots",
                actions.len(),
                entry.len()
            )));
        }
        for a in actions {
            if !a.iter().all(|v| v.is_finite())
                || a.iter().any(|v| v.abs() > ACTION_LIMIT_CM_S + 1e-12)
            {
                return Err(Error::contract(
                    "wheel delta outside [-0.1, 0.1] cm/s",
                ));
            }
        }

        // Failures scheduled for this step fire before motion.
        for i in 0..self.aggregate.robots.len() {
            let robot = &self.aggregate.robots[i];
            if !robot.failed && robot.fail_time == Some(self.step_index) {
                self.apply_failure(i)?;
            }
        }

        for (k, &i) in entry.iter().enumerate() {
            let robot = &mut self.aggregate.robots[i];
            if robot.failed {
                continue;
            }
            robot.wheel_velocities[0] += actions[k][0];
            robot.wheel_velocities[1] += actions[k][1];
            robot.clamp_wheels();
        }

        let attached = self.aggregate.attached_indices();
        let before_pose = self.aggregate.pose;
        let new_pose = if attached.is_empty() {
            before_pose
        } else {
            let commands: Vec<[f64; 2]> = attached
                .iter()
                .map(|&i| self.aggregate.robots[i].wheel_velocities)
                .collect();
            let twist = resolve_aggregate_twist(&self.aggregate, &commands, self.config.wheel_base)?;
            self.resolve_motion(twist.linear, twist.angular)
        };

        self.prev_pose = before_pose;
        self.prev_object_pos = before_pose.position();
        self.aggregate.pose = new_pose;
        self.step_index += 1;

        let success = self.success();
        let done = success || self.step_index >= self.config.max_steps;
        let observations: Vec<Observation> = attached
            .iter()
            .map(|&i| self.build_observation(i))
            .collect();
        let rewards = observations
            .iter()
            .map(|obs| {
                reward_value(
                    before_pose.position(),
                    new_pose.position(),
                    self.goal_center,
                    obs.mean_proximity(),
                )
            })
            .collect();

        Ok(StepOutcome {
            observations,
            rewards,
            done,
            success,
            aggregate_dtheta: wrap_angle(new_pose.theta - before_pose.theta),
        })
    }

    /// 24 ray readings for an attached robot; ray k points at body angle
    /// 2*pi*k/24, range 2 m, reading `1 - d/2` against obstacles and arena
    /// walls (other robots and the carried object are not sensed).
    pub fn sense_proximity(&self, robot_index: usize) -> [f64; PROXIMITY_RAYS] {
        assert!(
            !self.aggregate.robots[robot_index].failed,
            "sensing on a failed robot"
        );
        let origin = self.aggregate.robot_position(robot_index);
        let heading = self.aggregate.robot_heading(robot_index);
        let arena = self.config.arena();
        let walls = self.solid_rects();

        let mut readings = [0.0; PROXIMITY_RAYS];
        for (k, reading) in readings.iter_mut().enumerate() {
            let angle = heading + 2.0 * PI * k as f64 / PROXIMITY_RAYS as f64;
            let dir = Vec2::from_angle(angle);
            let mut nearest = f64::INFINITY;
            for obstacle in &self.obstacles {
                if let Obstacle::Cylinder { center, radius } = obstacle {
                    if let Some(t) = ray_circle(origin, dir, *center, *radius) {
                        nearest = nearest.min(t);
                    }
                }
            }
            for wall in &walls {
                if let Some(t) = ray_rect_enter(origin, dir, wall) {
                    nearest = nearest.min(t);
                }
            }
            if let Some(t) = ray_rect_exit(origin, dir, &arena) {
                nearest = nearest.min(t);
            }
            *reading = if nearest < PROXIMITY_RANGE_M {
                1.0 - nearest / PROXIMITY_RANGE_M
            } else {
                0.0
            };
        }
        readings
    }

    /// Local observation of an attached robot.
    pub fn build_observation(&self, robot_index: usize) -> Observation {
        let robot_pos = self.aggregate.robot_position(robot_index);
        let heading = self.aggregate.robot_heading(robot_index);
        let to_body = |v: Vec2| v.rotated(-heading);
        let rg = to_body(self.goal_center - robot_pos);
        let rc = to_body(self.object_position() - robot_pos);
        Observation {
            robot_to_goal: [rg.x, rg.y],
            robot_to_object: [rc.x, rc.y],
            object_goal_distance: (self.goal_center - self.object_position()).norm(),
            wheel_speeds: self.aggregate.robots[robot_index].wheel_velocities,
            proximity: self.sense_proximity(robot_index),
        }
    }

    /// Observations of all attached robots, index order.
    pub fn observations(&self) -> Vec<Observation> {
        self.attached_indices()
            .into_iter()
            .map(|i| self.build_observation(i))
            .collect()
    }

    fn solid_rects(&self) -> Vec<Rect> {
        self.obstacles
            .iter()
            .flat_map(|o| o.gate_walls(self.config.arena_height))
            .collect()
    }

    fn bodies_at(&self, pose: &Pose) -> Vec<(Vec2, f64)> {
        let mut bodies = vec![(pose.position(), self.config.object_radius)];
        for robot in &self.aggregate.robots {
            if robot.failed {
                continue;
            }
            let offset =
                Vec2::from_angle(pose.theta + robot.attachment_angle) * robot.attachment_radius;
            bodies.push((pose.position() + offset, self.config.robot_radius));
        }
        bodies
    }

    fn pose_collision_free(&self, pose: &Pose) -> bool {
        let walls = self.solid_rects();
        for (center, radius) in self.bodies_at(pose) {
            if center.x < radius - CONTACT_TOL
                || center.x > self.config.arena_width - radius + CONTACT_TOL
                || center.y < radius - CONTACT_TOL
                || center.y > self.config.arena_height - radius + CONTACT_TOL
            {
                return false;
            }
            for obstacle in &self.obstacles {
                if let Obstacle::Cylinder {
                    center: oc,
                    radius: or,
                } = obstacle
                {
                    if (center - *oc).norm() < radius + or - CONTACT_TOL {
                        return false;
                    }
                }
            }
            for wall in &walls {
                if wall.distance_to_point(center) < radius - CONTACT_TOL {
                    return false;
                }
            }
        }
        true
    }

    /// Normal of the deepest body/surface contact in `pose`, pointing away
    /// from the surface toward the body.
    fn deepest_contact_normal(&self, pose: &Pose) -> Option<Vec2> {
        let walls = self.solid_rects();
        let mut best: Option<(f64, Vec2)> = None;
        let mut consider = |pen: f64, normal: Vec2| {
            if pen > 0.0 && best.map_or(true, |(b, _)| pen > b) {
                best = Some((pen, normal));
            }
        };

        for (center, radius) in self.bodies_at(pose) {
            consider(radius - center.x, Vec2::new(1.0, 0.0));
            consider(
                center.x + radius - self.config.arena_width,
                Vec2::new(-1.0, 0.0),
            );
            consider(radius - center.y, Vec2::new(0.0, 1.0));
            consider(
                center.y + radius - self.config.arena_height,
                Vec2::new(0.0, -1.0),
            );
            for obstacle in &self.obstacles {
                if let Obstacle::Cylinder {
                    center: oc,
                    radius: or,
                } = obstacle
                {
                    let gap = center - *oc;
                    let pen = radius + or - gap.norm();
                    let normal = gap.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                    consider(pen, normal);
                }
            }
            for wall in &walls {
                let closest = wall.closest_point(center);
                let gap = center - closest;
                let pen = radius - gap.norm();
                let normal = gap
                    .normalized()
                    .or_else(|| (center - wall.center()).normalized())
                    .unwrap_or(Vec2::new(1.0, 0.0));
                consider(pen, normal);
            }
        }
        best.map(|(_, n)| n)
    }

    /// Integrates the twist over one step, sliding along the first contact
    /// rather than penetrating; fully blocked motion leaves the pose as-is.
    fn resolve_motion(&self, linear: Vec2, angular: f64) -> Pose {
        let dt = self.config.step_duration;
        let delta = linear * dt;
        let dtheta = angular * dt;
        let pose = self.aggregate.pose;

        let full = pose.advanced(delta, dtheta);
        if self.pose_collision_free(&full) {
            return full;
        }
        if let Some(normal) = self.deepest_contact_normal(&full) {
            let into = delta.dot(normal);
            if into < 0.0 {
                let slide = delta - normal * into;
                let cand = pose.advanced(slide, dtheta);
                if self.pose_collision_free(&cand) {
                    return cand;
                }
                let cand = pose.advanced(slide, 0.0);
                if self.pose_collision_free(&cand) {
                    return cand;
                }
            }
        }
        let rotate_only = pose.advanced(Vec2::ZERO, dtheta);
        if self.pose_collision_free(&rotate_only) {
            return rotate_only;
        }
        pose
    }
}

/// The per-step reward: `-2 + cos(angle between object->goal and the object
/// displacement) - mean proximity`, with the direction term defined as 0 when
/// the displacement (or the goal gap) is below 1e-9 m.
pub fn reward_value(
    object_before: Vec2,
    object_after: Vec2,
    goal: Vec2,
    mean_proximity: f64,
) -> f64 {
    let displacement = object_after - object_before;
    let to_goal = goal - object_before;
    let dn = displacement.norm();
    let gn = to_goal.norm();
    let direction = if dn < 1e-9 || gn < 1e-9 {
        0.0
    } else {
        to_goal.dot(displacement) / (gn * dn)
    };
    -2.0 + direction - mean_proximity
}

/// Reward of `robot_index` for the transition `before -> after`; the two
/// states must be consecutive steps of the same episode.
pub fn reward(before: &WorldState, after: &WorldState, robot_index: usize) -> Result<f64> {
    if after.step_index != before.step_index + 1 {
        return Err(Error::contract("states are not consecutive steps"));
    }
    if after.aggregate.robots[robot_index].failed {
        return Err(Error::contract("reward for a failed robot"));
    }
    let mean_p = after.build_observation(robot_index).mean_proximity();
    Ok(reward_value(
        before.object_position(),
        after.object_position(),
        after.goal_center,
        mean_p,
    ))
}

fn sample_obstacles<R: Rng + ?Sized>(
    config: &WorldConfig,
    suite: ObstacleSuite,
    rng: &mut R,
) -> Option<Vec<Obstacle>> {
    let zone = config.obstacle_zone;
    match suite {
        ObstacleSuite::TwoCylinders | ObstacleSuite::FourCylinders => {
            let r = config.cylinder_radius;
            let lo_x = zone.min.x + r;
            let hi_x = zone.max.x - r;
            let lo_y = zone.min.y + r;
            let hi_y = zone.max.y - r;
            if lo_x >= hi_x || lo_y >= hi_y {
                return None;
            }
            let mut cylinders: Vec<Obstacle> = Vec::new();
            for _ in 0..suite.cylinder_count() {
                let center = Vec2::new(rng.gen_range(lo_x..hi_x), rng.gen_range(lo_y..hi_y));
                let overlaps = cylinders.iter().any(|c| match c {
                    Obstacle::Cylinder { center: oc, .. } => (center - *oc).norm() < 2.0 * r,
                    _ => false,
                });
                if overlaps {
                    return None;
                }
                cylinders.push(Obstacle::Cylinder { center, radius: r });
            }
            Some(cylinders)
        }
        ObstacleSuite::Gate { opening_width } => {
            let half_t = config.gate_wall_thickness / 2.0;
            let lo_x = zone.min.x + half_t;
            let hi_x = zone.max.x - half_t;
            if lo_x >= hi_x {
                return None;
            }
            let x_position = rng.gen_range(lo_x..hi_x);
            let h = config.arena_height;
            let opening_center_y = if opening_width >= h {
                h / 2.0
            } else {
                rng.gen_range(opening_width / 2.0..h - opening_width / 2.0)
            };
            Some(vec![Obstacle::Gate {
                x_position,
                opening_center_y,
                opening_width,
                wall_thickness: config.gate_wall_thickness,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_world(seed: u64) -> WorldState {
        WorldState::reset(&WorldConfig::default(), ObstacleSuite::TwoCylinders, 4, seed).unwrap()
    }

    /// Bare world for hand-placed fixtures: one robot, huge empty arena.
    fn fixture_world(arena: f64) -> WorldState {
        let mut config = WorldConfig::with_arena(arena, arena);
        config.max_steps = 1000;
        let pose = Pose::new(arena / 2.0, arena / 2.0, 0.0);
        WorldState {
            aggregate: Aggregate::ring(pose, 1, config.attachment_radius, config.object_radius),
            obstacles: Vec::new(),
            step_index: 0,
            prev_object_pos: pose.position(),
            prev_pose: pose,
            goal_center: config.goal_zone.center(),
            rng: rng_from_seed(0),
            config,
        }
    }

    #[test]
    fn reset_is_deterministic_under_seed() {
        let a = small_world(17);
        let b = small_world(17);
        assert_eq!(a.aggregate, b.aggregate);
        assert_eq!(a.obstacles, b.obstacles);
        assert_eq!(a.step_index, 0);
    }

    #[test]
    fn reset_spaces_four_robots_by_quarter_turns() {
        let world = small_world(3);
        for i in 0..4 {
            let a = world.aggregate.robots[i].attachment_angle;
            let b = world.aggregate.robots[(i + 1) % 4].attachment_angle;
            assert_eq!(wrap_angle(b - a).abs(), PI / 2.0);
        }
    }

    #[test]
    fn gate_positions_stay_inside_the_obstacle_zone() {
        let config = WorldConfig::default();
        for seed in 0..1000 {
            let world = WorldState::reset(
                &config,
                ObstacleSuite::Gate { opening_width: 1.5 },
                4,
                seed,
            )
            .unwrap();
            match world.obstacles[0] {
                Obstacle::Gate { x_position, .. } => {
                    assert!(x_position >= config.obstacle_zone.min.x);
                    assert!(x_position <= config.obstacle_zone.max.x);
                }
                _ => panic!("expected a gate"),
            }
        }
    }

    #[test]
    fn zero_actions_zero_wheels_leave_object_in_place() {
        let mut world = small_world(5);
        let before = world.object_position();
        let outcome = world.step(&[[0.0, 0.0]; 4]).unwrap();
        assert_eq!(world.object_position(), before);
        for (obs, reward) in outcome.observations.iter().zip(&outcome.rewards) {
            let expect = -2.0 - obs.mean_proximity();
            assert!((reward - expect).abs() < 1e-12);
        }
        assert_eq!(outcome.aggregate_dtheta, 0.0);
    }

    #[test]
    fn step_rejects_wrong_action_count() {
        let mut world = small_world(5);
        assert!(matches!(
            world.step(&[[0.0, 0.0]; 3]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn step_rejects_out_of_range_delta() {
        let mut world = small_world(5);
        assert!(world.step(&[[0.2, 0.0], [0.0; 2], [0.0; 2], [0.0; 2]]).is_err());
    }

    #[test]
    fn wall_contact_never_penetrates() {
        // One robot driving straight at the east wall at full speed.
        let mut world = fixture_world(4.0);
        world.aggregate.robots[0].heading_offset = 0.0;
        world.aggregate.robots[0].wheel_velocities =
            [9.0, 9.0];
        let limit = world.config.arena_width - world.config.object_radius;
        for _ in 0..world.config.max_steps {
            world.step(&[[0.0, 0.0]]).unwrap();
            assert!(world.object_position().x <= limit + 1e-6);
            let robot = world.aggregate.robot_position(0);
            assert!(robot.x <= world.config.arena_width - world.config.robot_radius + 1e-6);
        }
        // It pressed up against the wall: at most one step of travel short.
        let travel_per_step = 0.09 * world.config.step_duration;
        let robot = world.aggregate.robot_position(0);
        assert!(
            robot.x > world.config.arena_width - world.config.robot_radius - travel_per_step - 1e-9
        );
    }

    #[test]
    fn rigidity_holds_over_random_rollout() {
        let mut world = small_world(23);
        let mut rng = rng_from_seed(99);
        let initial: Vec<Vec2> = (0..4).map(|i| world.aggregate.robot_position(i)).collect();
        let base: Vec<f64> = pairwise_distances(&initial);
        for _ in 0..300 {
            let actions: Vec<[f64; 2]> = (0..4)
                .map(|_| {
                    [
                        rng.gen_range(-ACTION_LIMIT_CM_S..=ACTION_LIMIT_CM_S),
                        rng.gen_range(-ACTION_LIMIT_CM_S..=ACTION_LIMIT_CM_S),
                    ]
                })
                .collect();
            world.step(&actions).unwrap();
            let here: Vec<Vec2> = (0..4).map(|i| world.aggregate.robot_position(i)).collect();
            for (a, b) in pairwise_distances(&here).iter().zip(&base) {
                assert!((a - b).abs() <= 1e-9);
            }
        }

        fn pairwise_distances(points: &[Vec2]) -> Vec<f64> {
            let mut out = Vec::new();
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    out.push((points[i] - points[j]).norm());
                }
            }
            out
        }
    }

    #[test]
    fn proximity_is_zero_in_empty_surroundings() {
        let world = fixture_world(100.0);
        assert_eq!(world.sense_proximity(0), [0.0; PROXIMITY_RAYS]);
    }

    #[test]
    fn proximity_is_one_at_touch() {
        let mut world = fixture_world(100.0);
        let origin = world.aggregate.robot_position(0);
        // Cylinder surface passes through the sensor origin.
        world.obstacles.push(Obstacle::Cylinder {
            center: origin + Vec2::new(0.5, 0.0),
            radius: 0.5,
        });
        let readings = world.sense_proximity(0);
        assert_eq!(readings.iter().cloned().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn wall_one_meter_ahead_reads_half() {
        let mut world = fixture_world(10.0);
        world.aggregate.robots[0].heading_offset = 0.0; // face +x
        // Place the robot center 1 m from the east wall.
        let r = world.config.attachment_radius;
        world.aggregate.pose = Pose::new(9.0 - r, 5.0, 0.0);
        let readings = world.sense_proximity(0);
        assert!((readings[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn proximity_monotone_as_obstacle_approaches() {
        let mut world = fixture_world(100.0);
        world.aggregate.robots[0].heading_offset = 0.0;
        let origin = world.aggregate.robot_position(0);
        let mut last = 0.0;
        for d in [1.9, 1.5, 1.0, 0.6, 0.3] {
            world.obstacles = vec![Obstacle::Cylinder {
                center: origin + Vec2::new(d + 0.2, 0.0),
                radius: 0.2,
            }];
            let reading = world.sense_proximity(0)[0];
            assert!(reading >= last);
            last = reading;
        }
    }

    #[test]
    fn observation_frames_match_hand_geometry() {
        let mut world = fixture_world(10.0);
        // Robot exactly at the goal center.
        world.goal_center = world.aggregate.robot_position(0);
        let obs = world.build_observation(0);
        let rg = Vec2::new(obs.robot_to_goal[0], obs.robot_to_goal[1]);
        assert!(rg.norm() < 1e-12);

        // Robot 1 m due east of the object, heading east: rc = (-1, 0).
        let mut world = fixture_world(10.0);
        world.aggregate.robots[0].attachment_radius = 1.0;
        world.aggregate.robots[0].attachment_angle = 0.0;
        world.aggregate.robots[0].heading_offset = 0.0;
        let obs = world.build_observation(0);
        assert!((obs.robot_to_object[0] + 1.0).abs() < 1e-12);
        assert!(obs.robot_to_object[1].abs() < 1e-12);
    }

    #[test]
    fn object_goal_distance_is_robot_independent() {
        let world = small_world(31);
        let distances: Vec<f64> = world
            .observations()
            .iter()
            .map(|o| o.object_goal_distance)
            .collect();
        for d in &distances {
            assert!((d - distances[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_examples() {
        let goal = Vec2::new(10.0, 0.0);
        // straight toward the goal, clear sensors
        let r = reward_value(Vec2::ZERO, Vec2::new(0.01, 0.0), goal, 0.0);
        assert!((r - (-1.0)).abs() < 1e-12);
        // straight away, saturated sensors
        let r = reward_value(Vec2::ZERO, Vec2::new(-0.01, 0.0), goal, 1.0);
        assert!((r - (-4.0)).abs() < 1e-12);
        // perpendicular, mean proximity 0.25
        let r = reward_value(Vec2::ZERO, Vec2::new(0.0, 0.01), goal, 0.25);
        assert!((r - (-2.25)).abs() < 1e-12);
        // degenerate displacement
        let r = reward_value(Vec2::ZERO, Vec2::new(0.0, 1e-12), goal, 0.5);
        assert!((r - (-2.5)).abs() < 1e-12);
    }

    #[test]
    fn reward_stays_in_bounds() {
        let mut rng = rng_from_seed(4);
        for _ in 0..1000 {
            let before = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let after = before
                + Vec2::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01));
            let goal = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let p = rng.gen_range(0.0..=1.0);
            let r = reward_value(before, after, goal, p);
            assert!((-4.0..=-1.0).contains(&r), "reward {r} out of bounds");
        }
    }

    #[test]
    fn failures_shrink_the_action_interface() {
        let mut world = small_world(41);
        world
            .set_failure_schedule(&[Some(0), None, None, None])
            .unwrap();
        let outcome = world.step(&[[0.0, 0.0]; 4]).unwrap();
        assert_eq!(outcome.observations.len(), 3);
        assert_eq!(outcome.rewards.len(), 3);
        assert_eq!(world.attached_indices(), vec![1, 2, 3]);
        // Next step wants 3 actions.
        assert!(world.step(&[[0.0, 0.0]; 4]).is_err());
        world.step(&[[0.0, 0.0]; 3]).unwrap();
    }

    #[test]
    fn failed_robot_commands_are_ignored() {
        let run = |failed_action: [f64; 2]| -> Pose {
            let mut world = small_world(41);
            world
                .set_failure_schedule(&[Some(0), None, None, None])
                .unwrap();
            for _ in 0..50 {
                let mut actions = vec![[0.05, 0.02]; world.attached_indices().len()];
                if actions.len() == 4 {
                    actions[0] = failed_action;
                }
                world.step(&actions).unwrap();
            }
            world.aggregate.pose
        };
        assert_eq!(run([0.1, -0.1]), run([-0.05, 0.05]));
    }

    #[test]
    fn double_failure_is_rejected() {
        let mut world = small_world(41);
        world.apply_failure(2).unwrap();
        assert!(matches!(world.apply_failure(2), Err(Error::Contract(_))));
    }

    #[test]
    fn success_triggers_done() {
        let mut world = small_world(8);
        // Teleport next to the goal zone.
        let goal = world.config.goal_zone;
        world.aggregate.pose = Pose::new(goal.min.x + 1.0, goal.center().y, 0.0);
        let outcome = world.step(&[[0.0, 0.0]; 4]).unwrap();
        assert!(outcome.success);
        assert!(outcome.done);
    }
}
