//! Trajectory logs: one CSV record per step for offline plotting and replay.
//!
//! Column order is fixed: `step, object_x, object_y, object_theta, dtheta,
//! done, success`, then per robot `r{i}_x, r{i}_y, r{i}_theta, r{i}_dvl,
//! r{i}_dvr, r{i}_reward`. Slots of failed robots hold `nan`.

use std::io::Write;
use std::path::Path;

use super::world::{StepOutcome, WorldState};
use crate::error::{Error, Result};

pub const FIXED_COLUMNS: usize = 7;
pub const PER_ROBOT_COLUMNS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub object_x: f64,
    pub object_y: f64,
    pub object_theta: f64,
    pub dtheta: f64,
    pub done: bool,
    pub success: bool,
    /// Per robot: x, y, theta, dv_l, dv_r, reward (NaN when failed).
    pub robots: Vec<[f64; PER_ROBOT_COLUMNS]>,
}

pub struct TrajectoryWriter<W: Write> {
    out: csv::Writer<W>,
    n_robots: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(inner: W, n_robots: usize) -> Result<Self> {
        let mut out = csv::Writer::from_writer(inner);
        let mut header = vec![
            "step".to_string(),
            "object_x".to_string(),
            "object_y".to_string(),
            "object_theta".to_string(),
            "dtheta".to_string(),
            "done".to_string(),
            "success".to_string(),
        ];
        for i in 0..n_robots {
            for col in ["x", "y", "theta", "dvl", "dvr", "reward"] {
                header.push(format!("r{i}_{col}"));
            }
        }
        out.write_record(&header).map_err(csv_error)?;
        Ok(Self { out, n_robots })
    }

    /// Appends the record for a just-executed step. `actions` are the wheel
    /// deltas sent this step, indexed like the entry-attached set the world
    /// reported before stepping.
    pub fn write_step(
        &mut self,
        world: &WorldState,
        entry_attached: &[usize],
        actions: &[[f64; 2]],
        outcome: &StepOutcome,
    ) -> Result<()> {
        if world.aggregate.robots.len() != self.n_robots {
            return Err(Error::contract("robot count changed mid-log"));
        }
        let pose = world.aggregate.pose;
        let mut record = vec![
            world.step_index.to_string(),
            fmt(pose.x),
            fmt(pose.y),
            fmt(pose.theta),
            fmt(outcome.aggregate_dtheta),
            (outcome.done as u8).to_string(),
            (outcome.success as u8).to_string(),
        ];

        let attached_now = world.attached_indices();
        for i in 0..self.n_robots {
            let robot = &world.aggregate.robots[i];
            if robot.failed {
                record.extend(std::iter::repeat("nan".to_string()).take(PER_ROBOT_COLUMNS));
                continue;
            }
            let pos = world.aggregate.robot_position(i);
            let heading = world.aggregate.robot_heading(i);
            let action = entry_attached
                .iter()
                .position(|&e| e == i)
                .map(|k| actions[k])
                .unwrap_or([f64::NAN; 2]);
            let reward = attached_now
                .iter()
                .position(|&a| a == i)
                .map(|k| outcome.rewards[k])
                .unwrap_or(f64::NAN);
            record.push(fmt(pos.x));
            record.push(fmt(pos.y));
            record.push(fmt(heading));
            record.push(fmt(action[0]));
            record.push(fmt(action[1]));
            record.push(fmt(reward));
        }
        self.out.write_record(&record).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.9}")
    }
}

fn csv_error(err: csv::Error) -> Error {
    match err.position() {
        Some(pos) => Error::Parse {
            line: pos.line() as usize,
            msg: err.to_string(),
        },
        None => Error::format(err.to_string()),
    }
}

/// Parses a trajectory CSV written by [`TrajectoryWriter`].
pub fn read_trajectory<P: AsRef<Path>>(path: P) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(csv_error)?;

    let header_len = reader.headers().map_err(csv_error)?.len();
    if header_len < FIXED_COLUMNS
        || (header_len - FIXED_COLUMNS) % PER_ROBOT_COLUMNS != 0
    {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected column count {header_len}"),
        });
    }
    let n_robots = (header_len - FIXED_COLUMNS) / PER_ROBOT_COLUMNS;

    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(csv_error)?;
        if record.len() != header_len {
            return Err(Error::Parse {
                line,
                msg: format!("expected {header_len} fields, found {}", record.len()),
            });
        }
        let field = |k: usize| -> Result<f64> {
            record[k].trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("column {k}: {e}"),
            })
        };
        let flag = |k: usize| -> Result<bool> {
            match record[k].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse {
                    line,
                    msg: format!("column {k}: expected 0/1, found {other:?}"),
                }),
            }
        };

        let mut robots = Vec::with_capacity(n_robots);
        for i in 0..n_robots {
            let base = FIXED_COLUMNS + i * PER_ROBOT_COLUMNS;
            let mut cols = [0.0; PER_ROBOT_COLUMNS];
            for (j, c) in cols.iter_mut().enumerate() {
                *c = field(base + j)?;
            }
            robots.push(cols);
        }
        rows.push(TrajectoryRow {
            step: field(0)? as usize,
            object_x: field(1)?,
            object_y: field(2)?,
            object_theta: field(3)?,
            dtheta: field(4)?,
            done: flag(5)?,
            success: flag(6)?,
            robots,
        });
    }
    Ok(rows)
}
