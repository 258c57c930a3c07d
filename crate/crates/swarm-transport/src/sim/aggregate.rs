//! The rigid robot aggregate and its quasi-static kinematics.
//!
//! Robots are rigidly gripped around the object at fixed offsets in the
//! aggregate frame, so their world positions are always derived from the
//! aggregate pose — pairwise distances cannot drift. Each robot's
//! differential drive *commands* a velocity at its attachment; the realized
//! motion is the rigid twist that fits all commands best in the least-squares
//! sense. The gap between commanded and realized motion is the push-pull each
//! robot feels through the frame, and is the only coupling channel under
//! implicit communication.

use std::f64::consts::PI;

use super::geom::{wrap_angle, Pose, Vec2};
use crate::error::{Error, Result};

/// Wheel speeds live in an open interval; clamping backs off by this margin.
pub const WHEEL_SPEED_LIMIT_CM_S: f64 = 10.0;
pub const WHEEL_SPEED_MARGIN: f64 = 1e-6;

/// One differential-drive robot of the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    /// Offset of the robot center from the object center, aggregate frame.
    pub attachment_radius: f64,
    pub attachment_angle: f64,
    /// Drive orientation relative to the aggregate frame; fixed after
    /// initialization (the free turret decouples the gripper from it).
    pub heading_offset: f64,
    /// Left/right wheel speeds, cm/s, each in (-10, 10).
    pub wheel_velocities: [f64; 2],
    pub failed: bool,
    /// Step at which the robot failed (or is scheduled to; `None` = never).
    pub fail_time: Option<usize>,
}

impl Robot {
    pub fn clamp_wheels(&mut self) {
        let limit = WHEEL_SPEED_LIMIT_CM_S - WHEEL_SPEED_MARGIN;
        for v in &mut self.wheel_velocities {
            *v = v.clamp(-limit, limit);
        }
    }
}

/// Rigid set of robots gripped around the object; `pose` is the shared
/// object/aggregate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub pose: Pose,
    pub robots: Vec<Robot>,
    pub object_radius: f64,
}

impl Aggregate {
    /// Robots equally spaced around the object, drive headings tangential
    /// (counterclockwise), wheels at rest.
    pub fn ring(pose: Pose, n_robots: usize, attachment_radius: f64, object_radius: f64) -> Self {
        let robots = (0..n_robots)
            .map(|i| {
                let angle = 2.0 * PI * i as f64 / n_robots as f64;
                Robot {
                    attachment_radius,
                    attachment_angle: angle,
                    heading_offset: wrap_angle(angle + PI / 2.0),
                    wheel_velocities: [0.0, 0.0],
                    failed: false,
                    fail_time: None,
                }
            })
            .collect();
        Self {
            pose,
            robots,
            object_radius,
        }
    }

    pub fn attached_indices(&self) -> Vec<usize> {
        self.robots
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.failed)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn attached_count(&self) -> usize {
        self.robots.iter().filter(|r| !r.failed).count()
    }

    /// World offset of robot `i`'s center from the object center.
    pub fn robot_offset_world(&self, i: usize) -> Vec2 {
        let r = &self.robots[i];
        Vec2::from_angle(self.pose.theta + r.attachment_angle) * r.attachment_radius
    }

    pub fn robot_position(&self, i: usize) -> Vec2 {
        self.pose.position() + self.robot_offset_world(i)
    }

    /// World drive heading of robot `i`.
    pub fn robot_heading(&self, i: usize) -> f64 {
        wrap_angle(self.pose.theta + self.robots[i].heading_offset)
    }
}

/// Rigid motion of the aggregate: world-frame linear velocity of the object
/// center plus the angular rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSolution {
    pub linear: Vec2,
    pub angular: f64,
    /// Per attached robot (index order): commanded minus realized velocity at
    /// its attachment — the push-pull error it feels.
    pub residuals: Vec<Vec2>,
}

/// Solves for the rigid twist best matching every attached robot's command.
///
/// Robot `i` commands the point velocity
/// `u_i = s_i * heading_i + w_i * perp(r_i)` at its attachment, where
/// `s_i = (v_l + v_r)/2` is its forward speed, `w_i = (v_r - v_l)/wheel_base`
/// its yaw rate transmitted through the rigid frame, and `r_i` its world
/// offset from the object center. The returned twist minimizes
/// `sum_i |u_i - (v + omega * perp(r_i))|^2`.
///
/// With a single attachment point the system is rank-deficient; the tie is
/// broken by taking `omega` as the mean commanded yaw rate, which makes a
/// lone robot realize its own differential-drive motion exactly.
///
/// `commanded` holds wheel speeds in cm/s, one pair per *attached* robot in
/// index order; velocities in the solution are m/s and rad/s.
pub fn resolve_aggregate_twist(
    agg: &Aggregate,
    commanded: &[[f64; 2]],
    wheel_base: f64,
) -> Result<TwistSolution> {
    let attached = agg.attached_indices();
    if attached.is_empty() {
        return Err(Error::contract("twist resolution with no attached robot"));
    }
    if commanded.len() != attached.len() {
        return Err(Error::contract(format!(
            "{} wheel commands for {} attached robots",
            commanded.len(),
            attached.len()
        )));
    }

    let n = attached.len() as f64;
    let mut commands = Vec::with_capacity(attached.len());
    let mut sum_u = Vec2::ZERO;
    let mut sum_p = Vec2::ZERO;
    let mut sum_pp = 0.0;
    let mut sum_pu = 0.0;
    let mut sum_w = 0.0;

    for (&i, wheels) in attached.iter().zip(commanded) {
        let [vl, vr] = *wheels;
        let speed = 0.01 * (vl + vr) / 2.0; // cm/s -> m/s
        let yaw_rate = 0.01 * (vr - vl) / wheel_base;
        let heading = Vec2::from_angle(agg.robot_heading(i));
        let p = agg.robot_offset_world(i).perp();
        let u = heading * speed + p * yaw_rate;

        sum_u += u;
        sum_p += p;
        sum_pp += p.dot(p);
        sum_pu += p.dot(u);
        sum_w += yaw_rate;
        commands.push((u, p));
    }

    // Normal equations for x = (v_x, v_y, omega):
    //   [ n 0 Px ] [v_x]   [ Ux ]
    //   [ 0 n Py ] [v_y] = [ Uy ]
    //   [ Px Py S ] [om ]   [ PU ]
    // Schur complement s = S - |P|^2 / n vanishes only when all attachment
    // points coincide (single robot).
    let schur = sum_pp - sum_p.dot(sum_p) / n;
    let (linear, angular) = if schur > 1e-12 * (1.0 + sum_pp) {
        let omega = (sum_pu - sum_p.dot(sum_u) / n) / schur;
        let v = (sum_u - sum_p * omega) * (1.0 / n);
        (v, omega)
    } else {
        let omega = sum_w / n;
        let v = (sum_u - sum_p * omega) * (1.0 / n);
        (v, omega)
    };

    let residuals = commands
        .iter()
        .map(|&(u, p)| u - (linear + p * angular))
        .collect();

    Ok(TwistSolution {
        linear,
        angular,
        residuals,
    })
}
