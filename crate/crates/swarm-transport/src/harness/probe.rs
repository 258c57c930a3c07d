//! Probe command: sensitivity analysis of a trained prediction network.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coord::{probe_gsp, write_probe_csv_file, ProbeTable};
use crate::error::{Error, Result};
use crate::rl::load_checkpoint_file;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub n_robots: usize,
    pub samples_per_period: usize,
    /// `max |pred_only_i| - min |pred_only_i|` per robot over the period.
    pub impact_scores: Vec<f64>,
    /// Robot indices sorted by descending impact.
    pub ranking: Vec<usize>,
    pub csv_path: String,
}

#[derive(Debug, Clone)]
pub struct ProbeArtifacts {
    pub table: ProbeTable,
    pub summary: ProbeSummary,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Loads a GSP checkpoint and writes `probe.csv` plus `probe_summary.json`
/// into `out_dir`.
pub fn cmd_probe(
    checkpoint_path: &Path,
    samples_per_period: usize,
    out_dir: &Path,
) -> Result<ProbeArtifacts> {
    if samples_per_period == 0 {
        return Err(Error::config("samples_per_period must be >= 1"));
    }
    let checkpoint = load_checkpoint_file(checkpoint_path)?;
    let gsp = checkpoint
        .gsp
        .as_ref()
        .ok_or_else(|| Error::config("probe needs a GSP checkpoint"))?;

    std::fs::create_dir_all(out_dir)?;
    let table = probe_gsp(&gsp.net, gsp.n_robots, samples_per_period)?;
    let csv_path = out_dir.join("probe.csv");
    write_probe_csv_file(&table, &csv_path)?;

    let mut ranking: Vec<usize> = (0..table.n_robots).collect();
    ranking.sort_by(|&a, &b| {
        table.impact_scores[b]
            .partial_cmp(&table.impact_scores[a])
            .expect("impact scores are finite")
    });
    let summary = ProbeSummary {
        n_robots: table.n_robots,
        samples_per_period,
        impact_scores: table.impact_scores.clone(),
        ranking,
        csv_path: csv_path.display().to_string(),
    };
    let summary_path = out_dir.join("probe_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::format(format!("summary serialization failed: {e}")))?,
    )?;

    Ok(ProbeArtifacts {
        table,
        summary,
        csv_path,
        summary_path,
    })
}
