//! Obstacles and the per-episode obstacle suites.

use serde::{Deserialize, Serialize};

use super::geom::{Rect, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Obstacle {
    Cylinder {
        center: Vec2,
        radius: f64,
    },
    /// Vertical wall spanning the arena height, pierced by one opening.
    Gate {
        x_position: f64,
        opening_center_y: f64,
        opening_width: f64,
        wall_thickness: f64,
    },
}

impl Obstacle {
    /// Solid rectangles a gate contributes; empty segments are dropped
    /// (a fully open gate has none).
    pub fn gate_walls(&self, arena_height: f64) -> Vec<Rect> {
        match *self {
            Obstacle::Cylinder { .. } => Vec::new(),
            Obstacle::Gate {
                x_position,
                opening_center_y,
                opening_width,
                wall_thickness,
            } => {
                let half_t = wall_thickness / 2.0;
                let lo = opening_center_y - opening_width / 2.0;
                let hi = opening_center_y + opening_width / 2.0;
                let mut walls = Vec::new();
                if lo > 0.0 {
                    walls.push(Rect::new(x_position - half_t, 0.0, x_position + half_t, lo));
                }
                if hi < arena_height {
                    walls.push(Rect::new(
                        x_position - half_t,
                        hi,
                        x_position + half_t,
                        arena_height,
                    ));
                }
                walls
            }
        }
    }

    /// Shortest distance from a point to the obstacle surface footprint
    /// (0 when inside).
    pub fn distance_to_point(&self, p: Vec2, arena_height: f64) -> f64 {
        match *self {
            Obstacle::Cylinder { center, radius } => ((p - center).norm() - radius).max(0.0),
            Obstacle::Gate { .. } => self
                .gate_walls(arena_height)
                .iter()
                .map(|r| r.distance_to_point(p))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Which obstacle field an episode draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleSuite {
    TwoCylinders,
    FourCylinders,
    /// Gate with the given opening width (set per episode by the curriculum
    /// during training, fixed at the configured value for evaluation).
    Gate { opening_width: f64 },
}

impl ObstacleSuite {
    pub fn cylinder_count(&self) -> usize {
        match self {
            ObstacleSuite::TwoCylinders => 2,
            ObstacleSuite::FourCylinders => 4,
            ObstacleSuite::Gate { .. } => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_open_gate_has_no_walls() {
        let gate = Obstacle::Gate {
            x_position: 5.0,
            opening_center_y: 3.0,
            opening_width: 6.0,
            wall_thickness: 0.1,
        };
        assert!(gate.gate_walls(6.0).is_empty());
    }

    #[test]
    fn narrow_gate_has_two_walls() {
        let gate = Obstacle::Gate {
            x_position: 5.0,
            opening_center_y: 3.0,
            opening_width: 1.0,
            wall_thickness: 0.2,
        };
        let walls = gate.gate_walls(6.0);
        assert_eq!(walls.len(), 2);
        assert_eq!(walls[0], Rect::new(4.9, 0.0, 5.1, 2.5));
        assert_eq!(walls[1], Rect::new(4.9, 3.5, 5.1, 6.0));
    }

    #[test]
    fn opening_at_the_bottom_leaves_one_wall() {
        let gate = Obstacle::Gate {
            x_position: 5.0,
            opening_center_y: 0.5,
            opening_width: 1.0,
            wall_thickness: 0.2,
        };
        let walls = gate.gate_walls(6.0);
        assert_eq!(walls.len(), 1);
        assert_eq!(walls[0], Rect::new(4.9, 1.0, 5.1, 6.0));
    }
}
