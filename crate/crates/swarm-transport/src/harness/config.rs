//! Experiment configuration: one struct covering the whole grid cell
//! (algorithm x coordination mode x obstacle suite), the world, and the
//! hyperparameters, with TOML override files and a stable content hash.

use serde::{Deserialize, Serialize};

use crate::coord::{CoordinationMode, GspTraining};
use crate::error::{Error, Result};
use crate::rl::{Algorithm, Hyperparams};
use crate::sim::{curriculum_gate_width, ObstacleSuite, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    TwoCylinders,
    FourCylinders,
    Gate,
}

impl std::fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SuiteKind::TwoCylinders => "two_cylinders",
            SuiteKind::FourCylinders => "four_cylinders",
            SuiteKind::Gate => "gate",
        };
        write!(f, "{name}")
    }
}

/// Gate curriculum: the opening starts at `initial` (defaulting to the arena
/// height, i.e. no obstacle) and shrinks by 0.5 m every `shrink_every`
/// training episodes down to the configured `world.gate_opening`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    pub shrink_every: usize,
    /// Initial opening width; `None` means the arena height.
    pub initial: Option<f64>,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            shrink_every: 200,
            initial: None,
        }
    }
}

/// Failure injection used by resilience evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FailureConfig {
    pub p_fail: f64,
    pub cap_fraction: f64,
}

impl Default for FailureConfig {
    fn default() -> Self {
        Self {
            p_fail: 0.25,
            cap_fraction: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub mode: CoordinationMode,
    pub suite: SuiteKind,
    pub n_robots: usize,
    /// Training episodes.
    pub episodes: usize,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub eval_episodes: usize,
    pub gsp_training: GspTraining,
    pub gsp_hidden: [usize; 2],
    pub world: WorldConfig,
    pub curriculum: CurriculumConfig,
    pub failure: FailureConfig,
    pub hyper: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Td3,
            mode: CoordinationMode::Ic,
            suite: SuiteKind::TwoCylinders,
            n_robots: 4,
            episodes: 5000,
            train_seed: 1,
            eval_seed: 2,
            eval_episodes: 100,
            gsp_training: GspTraining::Regression,
            gsp_hidden: [400, 300],
            world: WorldConfig::default(),
            curriculum: CurriculumConfig::default(),
            failure: FailureConfig::default(),
            hyper: Hyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.hyper.validate()?;
        if self.n_robots < 1 {
            return Err(Error::config("need at least one robot"));
        }
        if self.mode == CoordinationMode::Gk && self.n_robots < 2 {
            return Err(Error::config("global knowledge needs at least two robots"));
        }
        if self.train_seed == self.eval_seed {
            return Err(Error::config(
                "train_seed must differ from eval_seed (evaluation must not replay training scenarios)",
            ));
        }
        if self.eval_episodes < 1 {
            return Err(Error::config("eval_episodes must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.failure.p_fail)
            || !(0.0..=1.0).contains(&self.failure.cap_fraction)
        {
            return Err(Error::config("failure probabilities must lie in [0, 1]"));
        }
        if self.curriculum.shrink_every == 0 {
            return Err(Error::config("curriculum shrink_every must be >= 1"));
        }
        if let Some(initial) = self.curriculum.initial {
            if initial < self.world.gate_opening {
                return Err(Error::config(
                    "curriculum initial width below the final gate opening",
                ));
            }
        }
        if self.gsp_hidden.iter().any(|&w| w == 0) {
            return Err(Error::config("gsp_hidden widths must be >= 1"));
        }
        Ok(())
    }

    /// Policy input width for this mode and robot count.
    pub fn policy_width(&self) -> usize {
        self.mode.policy_input_width(self.n_robots)
    }

    /// The obstacle suite for one episode. Gate training episodes follow the
    /// curriculum; evaluation (`episode_index = None`) uses the configured
    /// final opening.
    pub fn obstacle_suite(&self, episode_index: Option<usize>) -> ObstacleSuite {
        match self.suite {
            SuiteKind::TwoCylinders => ObstacleSuite::TwoCylinders,
            SuiteKind::FourCylinders => ObstacleSuite::FourCylinders,
            SuiteKind::Gate => {
                let minimum = self.world.gate_opening;
                let opening_width = match episode_index {
                    Some(e) => {
                        let initial = self
                            .curriculum
                            .initial
                            .unwrap_or(self.world.arena_height)
                            .max(minimum);
                        curriculum_gate_width(initial, e, self.curriculum.shrink_every, minimum)
                    }
                    None => minimum,
                };
                ObstacleSuite::Gate { opening_width }
            }
        }
    }

    /// FNV-1a over the canonical JSON form; embedded in every output file.
    pub fn hash(&self) -> u64 {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canonical.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    /// Applies a (possibly partial) TOML document over this configuration.
    /// File values win over the base.
    pub fn with_toml_overrides(&self, text: &str) -> Result<ExperimentConfig> {
        let mut base = toml::Value::try_from(self)
            .map_err(|e| Error::config(format!("config serialization failed: {e}")))?;
        let overrides: toml::Value = text
            .parse()
            .map_err(|e| Error::config(format!("bad TOML: {e}")))?;
        deep_merge(&mut base, &overrides);
        let merged: ExperimentConfig = base
            .try_into()
            .map_err(|e| Error::config(format!("bad config value: {e}")))?;
        merged.validate()?;
        Ok(merged)
    }

    pub fn load_with_file<P: AsRef<std::path::Path>>(&self, path: P) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        self.with_toml_overrides(&text)
    }
}

fn deep_merge(base: &mut toml::Value, overrides: &toml::Value) {
    match (base, overrides) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (key, value) in o {
                match b.get_mut(key) {
                    Some(slot) => deep_merge(slot, value),
                    None => {
                        b.insert(key.clone(), value.clone());
                    }
                }
            }
        }
        (slot, value) => *slot = value.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn equal_seeds_are_rejected() {
        let cfg = ExperimentConfig {
            train_seed: 7,
            eval_seed: 7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::default();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig {
            train_seed: 99,
            ..Default::default()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn toml_overrides_win_and_merge_deeply() {
        let base = ExperimentConfig::default();
        let merged = base
            .with_toml_overrides(
                r#"
algorithm = "dqn"
episodes = 10

[world]
max_steps = 600

[hyper]
batch_size = 32
"#,
            )
            .unwrap();
        assert_eq!(merged.algorithm, Algorithm::Dqn);
        assert_eq!(merged.episodes, 10);
        assert_eq!(merged.world.max_steps, 600);
        assert_eq!(merged.hyper.batch_size, 32);
        // Untouched fields keep base values.
        assert_eq!(merged.world.arena_width, base.world.arena_width);
        assert_eq!(merged.hyper.gamma, base.hyper.gamma);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let base = ExperimentConfig::default();
        assert!(base.with_toml_overrides("does_not_exist = 3").is_err());
    }

    #[test]
    fn gate_suite_follows_the_curriculum() {
        let mut cfg = ExperimentConfig {
            suite: SuiteKind::Gate,
            ..Default::default()
        };
        cfg.world.gate_opening = 1.5;
        cfg.curriculum.shrink_every = 100;
        // Episode 0: full arena height (no obstacle).
        match cfg.obstacle_suite(Some(0)) {
            ObstacleSuite::Gate { opening_width } => {
                assert_eq!(opening_width, cfg.world.arena_height)
            }
            _ => panic!(),
        }
        match cfg.obstacle_suite(Some(250)) {
            ObstacleSuite::Gate { opening_width } => assert_eq!(opening_width, 5.0),
            _ => panic!(),
        }
        // Evaluation: the configured final opening.
        match cfg.obstacle_suite(None) {
            ObstacleSuite::Gate { opening_width } => assert_eq!(opening_width, 1.5),
            _ => panic!(),
        }
    }
}
