//! Action encoding shared by the discrete and continuous methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ACTION_LIMIT_CM_S;

/// What a policy emits for one robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    /// Index into the 9-entry wheel-delta table.
    Discrete(usize),
    /// Wheel deltas directly, cm/s, each in [-0.1, 0.1].
    Continuous([f64; 2]),
}

/// Bijective table between action indices and wheel-delta pairs over
/// `{-0.1, 0, 0.1}^2`, row-major in `(dv_left, dv_right)`.
pub struct ActionCodec;

impl ActionCodec {
    pub const COUNT: usize = 9;
    const LEVELS: [f64; 3] = [-ACTION_LIMIT_CM_S, 0.0, ACTION_LIMIT_CM_S];

    pub fn decode(index: usize) -> Result<[f64; 2]> {
        if index >= Self::COUNT {
            return Err(Error::contract(format!("action index {index} out of range")));
        }
        Ok([Self::LEVELS[index / 3], Self::LEVELS[index % 3]])
    }

    pub fn encode(delta: [f64; 2]) -> Option<usize> {
        let level = |v: f64| Self::LEVELS.iter().position(|&l| (l - v).abs() < 1e-12);
        Some(level(delta[0])? * 3 + level(delta[1])?)
    }
}

impl Action {
    /// The wheel deltas this action applies, cm/s.
    pub fn wheel_delta(&self) -> Result<[f64; 2]> {
        match *self {
            Action::Discrete(index) => ActionCodec::decode(index),
            Action::Continuous(delta) => {
                if delta.iter().any(|v| v.abs() > ACTION_LIMIT_CM_S + 1e-12) {
                    return Err(Error::contract("continuous action outside the box"));
                }
                Ok(delta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_bijective_with_nine_entries() {
        let mut seen = Vec::new();
        for index in 0..ActionCodec::COUNT {
            let delta = ActionCodec::decode(index).unwrap();
            assert!(!seen.contains(&delta));
            seen.push(delta);
            assert_eq!(ActionCodec::encode(delta), Some(index));
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn row_major_order() {
        assert_eq!(ActionCodec::decode(0).unwrap(), [-0.1, -0.1]);
        assert_eq!(ActionCodec::decode(1).unwrap(), [-0.1, 0.0]);
        assert_eq!(ActionCodec::decode(5).unwrap(), [0.0, 0.1]);
        assert_eq!(ActionCodec::decode(8).unwrap(), [0.1, 0.1]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(ActionCodec::decode(9).is_err());
        assert!(Action::Continuous([0.2, 0.0]).wheel_delta().is_err());
    }
}
