//! Sensitivity probe of a trained prediction network.
//!
//! Each robot's broadcast channel is driven by a clipped sine over one
//! period, with frequency increasing per robot so the channels stay visually
//! separable. The network is evaluated once per channel in isolation and
//! once with all channels active.

use std::io::Write;
use std::path::Path;

use super::gsp::gsp_predict;
use crate::error::Result;
use crate::nn::Mlp;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub t: f64,
    /// Clipped sine value per robot channel.
    pub inputs: Vec<f64>,
    /// Prediction with only channel i active, others zero.
    pub pred_only: Vec<f64>,
    /// Prediction with all channels active.
    pub pred_all: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub n_robots: usize,
    pub rows: Vec<ProbeRow>,
    /// Per robot: spread of |pred_only| over the period
    /// (`max |pred_only_i| - min |pred_only_i|`).
    pub impact_scores: Vec<f64>,
}

/// Evaluates the probe: `samples_per_period` rows over one period of 2*pi,
/// channel i driven by `clip(sin((i+1) * t), 0, 1)`.
pub fn probe_gsp(net: &Mlp, n_robots: usize, samples_per_period: usize) -> Result<ProbeTable> {
    let mut rows = Vec::with_capacity(samples_per_period);
    for k in 0..samples_per_period {
        let t = 2.0 * std::f64::consts::PI * k as f64 / samples_per_period as f64;
        let inputs: Vec<f64> = (0..n_robots)
            .map(|i| ((i + 1) as f64 * t).sin().clamp(0.0, 1.0))
            .collect();
        let mut pred_only = Vec::with_capacity(n_robots);
        for i in 0..n_robots {
            let mut masked = vec![0.0; n_robots];
            masked[i] = inputs[i];
            pred_only.push(gsp_predict(net, &masked)?);
        }
        let pred_all = gsp_predict(net, &inputs)?;
        rows.push(ProbeRow {
            t,
            inputs,
            pred_only,
            pred_all,
        });
    }

    let impact_scores = (0..n_robots)
        .map(|i| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for row in &rows {
                let magnitude = row.pred_only[i].abs();
                lo = lo.min(magnitude);
                hi = hi.max(magnitude);
            }
            hi - lo
        })
        .collect();

    Ok(ProbeTable {
        n_robots,
        rows,
        impact_scores,
    })
}

/// Writes the table as CSV with the fixed column layout
/// `t, p1..pN, pred_only_1..pred_only_N, pred_all` (2N + 2 columns).
pub fn write_probe_csv<W: Write>(table: &ProbeTable, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 1..=table.n_robots {
        header.push(format!("p{i}"));
    }
    for i in 1..=table.n_robots {
        header.push(format!("pred_only_{i}"));
    }
    header.push("pred_all".to_string());
    writer
        .write_record(&header)
        .map_err(|e| crate::error::Error::format(e.to_string()))?;

    for row in &table.rows {
        let mut record = vec![format!("{:.9}", row.t)];
        record.extend(row.inputs.iter().map(|v| format!("{v:.9}")));
        record.extend(row.pred_only.iter().map(|v| format!("{v:.9}")));
        record.push(format!("{:.9}", row.pred_all));
        writer
            .write_record(&record)
            .map_err(|e| crate::error::Error::format(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| crate::error::Error::format(e.to_string()))?;
    Ok(())
}

/// Convenience wrapper writing to a file path.
pub fn write_probe_csv_file<P: AsRef<Path>>(table: &ProbeTable, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_probe_csv(table, file)
}
