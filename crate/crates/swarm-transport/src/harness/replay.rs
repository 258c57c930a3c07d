//! Replay command: summary statistics and invariant checks over a
//! trajectory log.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::read_trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub rows: usize,
    pub episode_length: usize,
    pub success: bool,
    /// Straight-line distance between the first and last object positions.
    pub net_displacement: f64,
    pub orientation_min: f64,
    pub orientation_max: f64,
    pub reward_min: f64,
    pub reward_max: f64,
    pub mean_reward: f64,
}

/// Parses a trajectory log, validates its invariants (reward bounds, angle
/// wrap ranges, monotone step index), and summarizes it.
pub fn cmd_replay(path: &Path) -> Result<ReplaySummary> {
    let rows = read_trajectory(path)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "log holds no step records".to_string(),
        });
    }

    let mut reward_min = f64::INFINITY;
    let mut reward_max = f64::NEG_INFINITY;
    let mut reward_sum = 0.0;
    let mut reward_count = 0usize;
    let mut orientation_min = f64::INFINITY;
    let mut orientation_max = f64::NEG_INFINITY;

    for (k, row) in rows.iter().enumerate() {
        let line = k + 2;
        if row.step != rows[0].step + k {
            return Err(Error::Parse {
                line,
                msg: format!("step index {} breaks the sequence", row.step),
            });
        }
        for (name, angle) in [("object_theta", row.object_theta), ("dtheta", row.dtheta)] {
            if !(angle > -PI - 1e-12 && angle <= PI + 1e-12) {
                return Err(Error::Parse {
                    line,
                    msg: format!("{name} {angle} outside (-pi, pi]"),
                });
            }
        }
        orientation_min = orientation_min.min(row.object_theta);
        orientation_max = orientation_max.max(row.object_theta);
        for robot in &row.robots {
            let reward = robot[5];
            if reward.is_nan() {
                continue; // failed robot slot
            }
            if !(-4.0 - 1e-9..=-1.0 + 1e-9).contains(&reward) {
                return Err(Error::Parse {
                    line,
                    msg: format!("reward {reward} outside [-4, -1]"),
                });
            }
            reward_min = reward_min.min(reward);
            reward_max = reward_max.max(reward);
            reward_sum += reward;
            reward_count += 1;
        }
    }

    let first = rows.first().expect("non-empty");
    let last = rows.last().expect("non-empty");
    let dx = last.object_x - first.object_x;
    let dy = last.object_y - first.object_y;

    Ok(ReplaySummary {
        rows: rows.len(),
        episode_length: last.step,
        success: last.success,
        net_displacement: (dx * dx + dy * dy).sqrt(),
        orientation_min,
        orientation_max,
        reward_min,
        reward_max,
        mean_reward: if reward_count > 0 {
            reward_sum / reward_count as f64
        } else {
            f64::NAN
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ObstacleSuite, TrajectoryWriter, WorldConfig, WorldState};

    fn write_log(dir: &Path, actions: [f64; 2], steps: usize) -> std::path::PathBuf {
        let mut world =
            WorldState::reset(&WorldConfig::default(), ObstacleSuite::TwoCylinders, 4, 3).unwrap();
        let path = dir.join("traj.csv");
        let file = std::fs::File::create(&path).unwrap();
        let mut writer = TrajectoryWriter::new(file, 4).unwrap();
        for _ in 0..steps {
            let entry = world.attached_indices();
            let acts = vec![actions; entry.len()];
            let outcome = world.step(&acts).unwrap();
            writer.write_step(&world, &entry, &acts, &outcome).unwrap();
        }
        writer.finish().unwrap();
        path
    }

    #[test]
    fn zero_action_episode_has_zero_net_displacement() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_log(dir.path(), [0.0, 0.0], 10);
        let summary = cmd_replay(&path).unwrap();
        assert_eq!(summary.rows, 10);
        assert_eq!(summary.net_displacement, 0.0);
        assert!(summary.reward_min >= -4.0 && summary.reward_max <= -1.0);
    }

    #[test]
    fn summary_is_stable_across_repeated_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_log(dir.path(), [0.1, 0.08], 25);
        let a = cmd_replay(&path).unwrap();
        let b = cmd_replay(&path).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_reward_is_flagged_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_log(dir.path(), [0.0, 0.0], 3);
        let mut text = std::fs::read_to_string(&path).unwrap();
        // Break the reward of robot 0 in the second data row (line 3).
        let lines: Vec<&str> = text.lines().collect();
        let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
        fields[12] = "7.5".to_string();
        let fixed = fields.join(",");
        text = text.replace(lines[2], &fixed);
        std::fs::write(&path, text).unwrap();
        match cmd_replay(&path) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("reward"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
