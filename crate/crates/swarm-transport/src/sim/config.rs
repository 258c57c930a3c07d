//! World geometry and physics constants.

use serde::{Deserialize, Serialize};

use super::geom::Rect;
use crate::error::{Error, Result};

/// Arena layout, step budget, and physical constants of the transport task.
///
/// The defaults describe a 10 m x 6 m arena split into three equal-width
/// zones (aggregate generation, obstacle generation, goal), sized so a
/// straight run to the goal takes roughly a third of the step budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub arena_width: f64,
    pub arena_height: f64,
    pub robot_zone: Rect,
    pub obstacle_zone: Rect,
    pub goal_zone: Rect,
    pub max_steps: usize,
    /// Seconds integrated per control step.
    pub step_duration: f64,
    /// Success when the object center is within this distance of the goal zone.
    pub goal_tolerance: f64,
    pub object_radius: f64,
    /// Distance from the object center to each robot center.
    pub attachment_radius: f64,
    pub robot_radius: f64,
    /// Distance between a robot's wheels, meters.
    pub wheel_base: f64,
    pub cylinder_radius: f64,
    pub gate_wall_thickness: f64,
    /// Gate opening used outside curriculum training (and the curriculum floor).
    pub gate_opening: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let (w, h) = (10.0, 6.0);
        Self {
            arena_width: w,
            arena_height: h,
            robot_zone: Rect::new(0.0, 0.0, w / 3.0, h),
            obstacle_zone: Rect::new(w / 3.0, 0.0, 2.0 * w / 3.0, h),
            goal_zone: Rect::new(2.0 * w / 3.0, 0.0, w, h),
            max_steps: 2000,
            step_duration: 0.1,
            goal_tolerance: 0.25,
            object_radius: 0.35,
            attachment_radius: 0.45,
            robot_radius: 0.085,
            wheel_base: 0.14,
            cylinder_radius: 0.25,
            gate_wall_thickness: 0.1,
            gate_opening: 1.5,
        }
    }
}

impl WorldConfig {
    /// Convenience: a `width x height` arena with three equal-width zones and
    /// default physics.
    pub fn with_arena(width: f64, height: f64) -> Self {
        Self {
            arena_width: width,
            arena_height: height,
            robot_zone: Rect::new(0.0, 0.0, width / 3.0, height),
            obstacle_zone: Rect::new(width / 3.0, 0.0, 2.0 * width / 3.0, height),
            goal_zone: Rect::new(2.0 * width / 3.0, 0.0, width, height),
            ..Self::default()
        }
    }

    pub fn arena(&self) -> Rect {
        Rect::new(0.0, 0.0, self.arena_width, self.arena_height)
    }

    /// Object center to outermost robot surface.
    pub fn aggregate_radius(&self) -> f64 {
        self.attachment_radius + self.robot_radius
    }

    pub fn validate(&self) -> Result<()> {
        if self.arena_width <= 0.0 || self.arena_height <= 0.0 {
            return Err(Error::config("arena dimensions must be positive"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("max_steps must be >= 1"));
        }
        for (name, v) in [
            ("step_duration", self.step_duration),
            ("goal_tolerance", self.goal_tolerance),
            ("object_radius", self.object_radius),
            ("attachment_radius", self.attachment_radius),
            ("robot_radius", self.robot_radius),
            ("wheel_base", self.wheel_base),
            ("cylinder_radius", self.cylinder_radius),
            ("gate_wall_thickness", self.gate_wall_thickness),
            ("gate_opening", self.gate_opening),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.attachment_radius <= self.object_radius {
            return Err(Error::config(
                "attachment_radius must exceed object_radius",
            ));
        }

        let arena = self.arena();
        let zones = [
            ("robot_zone", &self.robot_zone),
            ("obstacle_zone", &self.obstacle_zone),
            ("goal_zone", &self.goal_zone),
        ];
        for (name, zone) in &zones {
            if zone.is_empty() || !zone.is_valid() {
                return Err(Error::config(format!("{name} is degenerate")));
            }
            if !arena.contains_rect(zone) {
                return Err(Error::config(format!("{name} is not inside the arena")));
            }
        }
        // Left-to-right, non-overlapping column layout.
        if self.robot_zone.max.x > self.obstacle_zone.min.x + 1e-12
            || self.obstacle_zone.max.x > self.goal_zone.min.x + 1e-12
        {
            return Err(Error::config(
                "zones must be ordered left to right without overlap",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        WorldConfig::default().validate().unwrap();
    }

    #[test]
    fn overlapping_zones_are_rejected() {
        let mut cfg = WorldConfig::default();
        cfg.robot_zone = Rect::new(0.0, 0.0, 5.0, 6.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zone_outside_arena_is_rejected() {
        let mut cfg = WorldConfig::default();
        cfg.goal_zone = Rect::new(8.0, 0.0, 12.0, 6.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = WorldConfig::with_arena(6.0, 4.0);
        let text = toml::to_string(&cfg).unwrap();
        let back: WorldConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
