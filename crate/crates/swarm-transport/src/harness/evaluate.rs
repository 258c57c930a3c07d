//! Frozen-policy evaluation campaigns.
//!
//! Scenario streams derive by counter from `eval_seed`, so two checkpoints
//! evaluated with the same seed see byte-identical episode sequences (paired
//! comparison), and episodes can run on parallel workers without changing
//! any result.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::coord::CoordinationMode;
use crate::error::{Error, Result};
use crate::rl::{
    load_checkpoint_file, run_episode_actde, Checkpoint, CoordinationRuntime, ReplayBuffer,
};
use crate::rng::{derive_seed, derived_rng};
use crate::sim::{sample_failure_schedule, TrajectoryWriter, WorldState};

use super::config::ExperimentConfig;
use super::report::{CampaignResult, EpisodeRecord};
use super::train::{STREAM_EPISODE_BASE, STREAM_FAILURE_BASE};

/// Compatibility gate between a checkpoint and the evaluation config.
pub fn check_compatible(checkpoint: &Checkpoint, config: &ExperimentConfig) -> Result<()> {
    if checkpoint.mode != config.mode {
        return Err(Error::config(format!(
            "checkpoint mode {} != configured mode {}",
            checkpoint.mode, config.mode
        )));
    }
    if checkpoint.algorithm != config.algorithm {
        return Err(Error::config(format!(
            "checkpoint algorithm {} != configured algorithm {}",
            checkpoint.algorithm, config.algorithm
        )));
    }
    let expected = config.policy_width();
    if checkpoint.obs_width != expected {
        return Err(Error::config(format!(
            "checkpoint width {} != {} required by {} with {} robots",
            checkpoint.obs_width,
            expected,
            config.mode,
            config.n_robots
        )));
    }
    if config.mode == CoordinationMode::Gsp {
        match &checkpoint.gsp {
            None => return Err(Error::config("GSP evaluation needs a GSP checkpoint")),
            Some(gsp) if gsp.n_robots != config.n_robots => {
                return Err(Error::config(format!(
                    "prediction network built for {} robots, config has {}",
                    gsp.n_robots, config.n_robots
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Runs `eval_episodes` greedy episodes. `with_failures` draws a failure
/// schedule per episode from its own seed stream, so the scenario stream is
/// identical with and without failure injection.
pub fn evaluate_checkpoint(
    checkpoint: &Checkpoint,
    config: &ExperimentConfig,
    with_failures: bool,
    trajectories: Option<&Path>,
) -> Result<CampaignResult> {
    config.validate()?;
    check_compatible(checkpoint, config)?;
    if let Some(dir) = trajectories {
        std::fs::create_dir_all(dir)?;
    }

    let episodes: Vec<EpisodeRecord> = (0..config.eval_episodes)
        .into_par_iter()
        .map(|episode| run_eval_episode(checkpoint, config, episode, with_failures, trajectories))
        .collect::<Result<Vec<_>>>()?;

    let successes = episodes.iter().filter(|e| e.success).count();
    let n = episodes.len();
    Ok(CampaignResult {
        algorithm: config.algorithm.to_string(),
        mode: config.mode.to_string(),
        suite: config.suite.to_string(),
        n_robots: config.n_robots,
        eval_seed: config.eval_seed,
        eval_episodes: n,
        successes,
        success_rate: successes as f64 / n as f64,
        mean_steps: episodes.iter().map(|e| e.steps as f64).sum::<f64>() / n as f64,
        mean_return: episodes.iter().map(|e| e.mean_return).sum::<f64>() / n as f64,
        mean_failures: episodes.iter().map(|e| e.failures as f64).sum::<f64>() / n as f64,
        config_hash: config.hash_hex(),
        checkpoint: String::new(),
        episodes,
    })
}

fn run_eval_episode(
    checkpoint: &Checkpoint,
    config: &ExperimentConfig,
    episode: usize,
    with_failures: bool,
    trajectories: Option<&Path>,
) -> Result<EpisodeRecord> {
    let world_seed = derive_seed(config.eval_seed, STREAM_EPISODE_BASE + episode as u64);
    let mut world = WorldState::reset(
        &config.world,
        config.obstacle_suite(None),
        config.n_robots,
        world_seed,
    )?;
    if with_failures {
        let mut failure_rng = derived_rng(config.eval_seed, STREAM_FAILURE_BASE + episode as u64);
        let schedule = sample_failure_schedule(
            config.n_robots,
            config.world.max_steps,
            config.failure.p_fail,
            config.failure.cap_fraction,
            &mut failure_rng,
        );
        world.set_failure_schedule(&schedule)?;
    }

    // Each worker owns value copies; evaluation mutates none of them.
    let mut agent = checkpoint.agent.clone();
    let mut gsp = checkpoint.gsp.clone();
    let mut coordination = match gsp.as_mut() {
        Some(state) => CoordinationRuntime::gsp(state),
        None => match config.mode {
            CoordinationMode::Ic => CoordinationRuntime::ic(),
            CoordinationMode::Gk => CoordinationRuntime::gk(),
            CoordinationMode::Gsp => {
                return Err(Error::config("GSP evaluation needs a GSP checkpoint"))
            }
        },
    };
    let mut buffer = ReplayBuffer::new(1);
    let mut rng = derived_rng(config.eval_seed, 2 * STREAM_FAILURE_BASE + episode as u64);

    let mut log = match trajectories {
        Some(dir) => {
            let file = std::fs::File::create(dir.join(format!("episode_{episode:04}.csv")))?;
            Some(TrajectoryWriter::new(file, config.n_robots)?)
        }
        None => None,
    };

    let report = run_episode_actde(
        &mut agent,
        &mut buffer,
        &mut world,
        &mut coordination,
        &config.hyper,
        false,
        &mut rng,
        log.as_mut(),
    )?;
    if let Some(writer) = log {
        writer.finish()?;
    }

    let failures = world.aggregate.robots.iter().filter(|r| r.failed).count();
    Ok(EpisodeRecord {
        episode,
        seed: world_seed,
        success: report.success,
        steps: report.steps,
        mean_return: report.returns.iter().sum::<f64>() / report.returns.len().max(1) as f64,
        failures,
    })
}

#[derive(Debug, Clone)]
pub struct EvaluateArtifacts {
    pub result: CampaignResult,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Loads a checkpoint, evaluates it, and writes `campaign.json` plus
/// `eval_episodes.csv` into `out_dir`.
pub fn cmd_evaluate(
    checkpoint_path: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
    trajectories: Option<&Path>,
) -> Result<EvaluateArtifacts> {
    run_campaign(checkpoint_path, config, out_dir, false, trajectories)
}

/// Evaluation with per-episode failure schedules (resilience study).
pub fn cmd_resilience(
    checkpoint_path: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
    trajectories: Option<&Path>,
) -> Result<EvaluateArtifacts> {
    run_campaign(checkpoint_path, config, out_dir, true, trajectories)
}

fn run_campaign(
    checkpoint_path: &Path,
    config: &ExperimentConfig,
    out_dir: &Path,
    with_failures: bool,
    trajectories: Option<&Path>,
) -> Result<EvaluateArtifacts> {
    let checkpoint = load_checkpoint_file(checkpoint_path)?;
    std::fs::create_dir_all(out_dir)?;
    let mut result = evaluate_checkpoint(&checkpoint, config, with_failures, trajectories)?;
    result.checkpoint = checkpoint_path.display().to_string();
    let json_path = out_dir.join(if with_failures {
        "resilience.json"
    } else {
        "campaign.json"
    });
    let csv_path = out_dir.join(if with_failures {
        "resilience_episodes.csv"
    } else {
        "eval_episodes.csv"
    });
    result.write_json(&json_path)?;
    result.write_episode_csv(&csv_path)?;
    Ok(EvaluateArtifacts {
        result,
        json_path,
        csv_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{Agent, Algorithm};
    use crate::rng::rng_from_seed;

    fn quick_config() -> ExperimentConfig {
        let mut config = ExperimentConfig {
            algorithm: Algorithm::Dqn,
            n_robots: 3,
            eval_episodes: 6,
            ..Default::default()
        };
        config.world = crate::sim::WorldConfig::with_arena(6.0, 4.0);
        config.world.max_steps = 20;
        config.hyper.q_hidden = [8, 8];
        config.hyper.actor_hidden = [8, 8];
        config
    }

    fn untrained_checkpoint(config: &ExperimentConfig) -> Checkpoint {
        let mut rng = rng_from_seed(11);
        Checkpoint {
            algorithm: config.algorithm,
            mode: config.mode,
            n_robots: config.n_robots,
            obs_width: config.policy_width(),
            config_hash: config.hash(),
            agent: Agent::new(config.algorithm, config.policy_width(), &config.hyper, &mut rng)
                .unwrap(),
            gsp: None,
        }
    }

    #[test]
    fn evaluation_is_reproducible() {
        let config = quick_config();
        let checkpoint = untrained_checkpoint(&config);
        let a = evaluate_checkpoint(&checkpoint, &config, false, None).unwrap();
        let b = evaluate_checkpoint(&checkpoint, &config, false, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn paired_scenarios_are_identical_across_policies() {
        let config = quick_config();
        let a = untrained_checkpoint(&config);
        let mut rng = rng_from_seed(99);
        let mut b = a.clone();
        b.agent =
            Agent::new(config.algorithm, config.policy_width(), &config.hyper, &mut rng).unwrap();
        let ra = evaluate_checkpoint(&a, &config, false, None).unwrap();
        let rb = evaluate_checkpoint(&b, &config, false, None).unwrap();
        for (ea, eb) in ra.episodes.iter().zip(&rb.episodes) {
            assert_eq!(ea.seed, eb.seed);
        }
    }

    #[test]
    fn zero_failure_probability_matches_plain_evaluation() {
        let mut config = quick_config();
        config.failure.p_fail = 0.0;
        let checkpoint = untrained_checkpoint(&config);
        let plain = evaluate_checkpoint(&checkpoint, &config, false, None).unwrap();
        let resilient = evaluate_checkpoint(&checkpoint, &config, true, None).unwrap();
        assert_eq!(plain.episodes, resilient.episodes);
        assert_eq!(resilient.mean_failures, 0.0);
    }

    #[test]
    fn trivially_successful_world_gives_rate_one() {
        let mut config = quick_config();
        // Success tolerance so large every spawn already counts.
        config.world.goal_tolerance = 100.0;
        let checkpoint = untrained_checkpoint(&config);
        let result = evaluate_checkpoint(&checkpoint, &config, false, None).unwrap();
        assert_eq!(result.success_rate, 1.0);
        assert_eq!(result.successes, result.eval_episodes);
    }

    #[test]
    fn incompatible_checkpoint_is_rejected() {
        let config = quick_config();
        let checkpoint = untrained_checkpoint(&config);
        let mut gk_config = config.clone();
        gk_config.mode = CoordinationMode::Gk;
        assert!(matches!(
            evaluate_checkpoint(&checkpoint, &gk_config, false, None),
            Err(Error::Config(_))
        ));
    }
}
