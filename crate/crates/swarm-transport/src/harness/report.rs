//! Campaign results and metric streams.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// World seed the scenario was generated from.
    pub seed: u64,
    pub success: bool,
    pub steps: usize,
    /// Return averaged over robot slots.
    pub mean_return: f64,
    /// Robots that failed during the episode.
    pub failures: usize,
}

/// Aggregated outcome of an evaluation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub algorithm: String,
    pub mode: String,
    pub suite: String,
    pub n_robots: usize,
    pub eval_seed: u64,
    pub eval_episodes: usize,
    pub successes: usize,
    /// `successes / eval_episodes`, exactly.
    pub success_rate: f64,
    pub mean_steps: f64,
    pub mean_return: f64,
    pub mean_failures: f64,
    pub config_hash: String,
    pub checkpoint: String,
    pub episodes: Vec<EpisodeRecord>,
}

impl CampaignResult {
    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(format!("result serialization failed: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("bad result JSON: {e}")))
    }

    /// Per-episode CSV: `episode, seed, success, steps, mean_return,
    /// failures, config_hash`.
    pub fn write_episode_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = csv::Writer::from_path(path.as_ref())
            .map_err(|e| Error::format(e.to_string()))?;
        out.write_record([
            "episode",
            "seed",
            "success",
            "steps",
            "mean_return",
            "failures",
            "config_hash",
        ])
        .map_err(|e| Error::format(e.to_string()))?;
        for r in &self.episodes {
            out.write_record([
                r.episode.to_string(),
                r.seed.to_string(),
                (r.success as u8).to_string(),
                r.steps.to_string(),
                format!("{:.9}", r.mean_return),
                r.failures.to_string(),
                self.config_hash.clone(),
            ])
            .map_err(|e| Error::format(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Streaming writer for training metrics:
/// `episode, steps, return, success, epsilon, mean_loss[, gate_width],
/// config_hash`.
pub struct MetricsWriter<W: Write> {
    out: csv::Writer<W>,
    with_gate_width: bool,
    config_hash: String,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(inner: W, with_gate_width: bool, config_hash: String) -> Result<Self> {
        let mut out = csv::Writer::from_writer(inner);
        let mut header = vec![
            "episode".to_string(),
            "steps".to_string(),
            "return".to_string(),
            "success".to_string(),
            "epsilon".to_string(),
            "mean_loss".to_string(),
        ];
        if with_gate_width {
            header.push("gate_width".to_string());
        }
        header.push("config_hash".to_string());
        out.write_record(&header)
            .map_err(|e| Error::format(e.to_string()))?;
        Ok(Self {
            out,
            with_gate_width,
            config_hash,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn write_episode(
        &mut self,
        episode: usize,
        steps: usize,
        mean_return: f64,
        success: bool,
        epsilon: f64,
        mean_loss: f64,
        gate_width: Option<f64>,
    ) -> Result<()> {
        let mut record = vec![
            episode.to_string(),
            steps.to_string(),
            format!("{mean_return:.9}"),
            (success as u8).to_string(),
            format!("{epsilon:.9}"),
            format!("{mean_loss:.9}"),
        ];
        if self.with_gate_width {
            record.push(format!("{:.9}", gate_width.unwrap_or(f64::NAN)));
        }
        record.push(self.config_hash.clone());
        self.out
            .write_record(&record)
            .map_err(|e| Error::format(e.to_string()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
