//! The training campaign: seeded episodes, metrics stream, checkpoint.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::coord::{CoordinationMode, GspState};
use crate::error::{Error, Result};
use crate::rl::{
    run_episode_actde, save_checkpoint_file, Agent, Checkpoint, CoordinationRuntime, ReplayBuffer,
    Transition,
};
use crate::rng::derived_rng;
use crate::sim::{ObstacleSuite, TrajectoryWriter, WorldState};

use super::config::{ExperimentConfig, SuiteKind};
use super::report::MetricsWriter;

/// Seed-stream roles under a base seed; keep the numbering stable or
/// recorded results stop being reproducible.
const STREAM_AGENT_INIT: u64 = 0;
const STREAM_TRAINING: u64 = 1;
pub(crate) const STREAM_EPISODE_BASE: u64 = 1000;
pub(crate) const STREAM_FAILURE_BASE: u64 = 1_000_000_000;

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub checkpoint_path: PathBuf,
    pub metrics_path: PathBuf,
    pub episodes_run: usize,
    pub final_success_rate_window: f64,
}

/// Trains per the configuration and writes `checkpoint.agtc` plus
/// `train_metrics.csv` into `out_dir`. Fully determined by
/// `(config, train_seed)`.
///
/// On divergence the campaign aborts, keeping the checkpoint of the last
/// consistent parameters (updates validate gradients before mutating).
pub fn cmd_train(config: &ExperimentConfig, out_dir: &Path) -> Result<TrainArtifacts> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let checkpoint_path = out_dir.join("checkpoint.agtc");
    let metrics_path = out_dir.join("train_metrics.csv");

    let mut init_rng = derived_rng(config.train_seed, STREAM_AGENT_INIT);
    let mut train_rng = derived_rng(config.train_seed, STREAM_TRAINING);

    let mut agent = Agent::new(
        config.algorithm,
        config.policy_width(),
        &config.hyper,
        &mut init_rng,
    )?;
    let mut gsp = match config.mode {
        CoordinationMode::Gsp => Some(GspState::new(
            config.n_robots,
            config.gsp_hidden,
            config.gsp_training,
            config.hyper.actor_lr,
            config.hyper.critic_lr,
            config.hyper.replay_capacity,
            &mut init_rng,
        )?),
        _ => None,
    };
    let mut buffer: ReplayBuffer<Transition> = ReplayBuffer::new(config.hyper.replay_capacity);

    let with_gate = config.suite == SuiteKind::Gate;
    let mut metrics = MetricsWriter::new(
        File::create(&metrics_path)?,
        with_gate,
        config.hash_hex(),
    )?;

    let mut recent: Vec<bool> = Vec::new();
    let mut outcome: Result<()> = Ok(());
    let mut episodes_run = 0;

    for episode in 0..config.episodes {
        let suite = config.obstacle_suite(Some(episode));
        let mut world = WorldState::reset(
            &config.world,
            suite,
            config.n_robots,
            crate::rng::derive_seed(config.train_seed, STREAM_EPISODE_BASE + episode as u64),
        )?;

        let mut coordination = match gsp.as_mut() {
            Some(state) => CoordinationRuntime::gsp(state),
            None => match config.mode {
                CoordinationMode::Ic => CoordinationRuntime::ic(),
                CoordinationMode::Gk => CoordinationRuntime::gk(),
                CoordinationMode::Gsp => unreachable!("GSP state built above"),
            },
        };

        let report = match run_episode_actde(
            &mut agent,
            &mut buffer,
            &mut world,
            &mut coordination,
            &config.hyper,
            true,
            &mut train_rng,
            None as Option<&mut TrajectoryWriter<File>>,
        ) {
            Ok(report) => report,
            Err(err @ Error::Divergence(_)) => {
                outcome = Err(Error::divergence(format!(
                    "episode {episode}: {err}; checkpoint holds the last consistent parameters"
                )));
                break;
            }
            Err(err) => return Err(err),
        };

        let mean_return =
            report.returns.iter().sum::<f64>() / report.returns.len().max(1) as f64;
        let gate_width = match suite {
            ObstacleSuite::Gate { opening_width } => Some(opening_width),
            _ => None,
        };
        metrics.write_episode(
            episode,
            report.steps,
            mean_return,
            report.success,
            report.final_epsilon,
            report.mean_loss,
            gate_width,
        )?;

        recent.push(report.success);
        if recent.len() > 100 {
            recent.remove(0);
        }
        episodes_run += 1;
    }
    metrics.finish()?;

    let checkpoint = Checkpoint {
        algorithm: config.algorithm,
        mode: config.mode,
        n_robots: config.n_robots,
        obs_width: config.policy_width(),
        config_hash: config.hash(),
        agent,
        gsp,
    };
    save_checkpoint_file(&checkpoint, &checkpoint_path)?;

    outcome?;
    let window_rate = if recent.is_empty() {
        0.0
    } else {
        recent.iter().filter(|&&s| s).count() as f64 / recent.len() as f64
    };
    Ok(TrainArtifacts {
        checkpoint_path,
        metrics_path,
        episodes_run,
        final_success_rate_window: window_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{load_checkpoint_file, Algorithm};

    fn quick_config() -> ExperimentConfig {
        let mut config = ExperimentConfig {
            algorithm: Algorithm::Dqn,
            episodes: 3,
            n_robots: 3,
            ..Default::default()
        };
        config.world = crate::sim::WorldConfig::with_arena(6.0, 4.0);
        config.world.max_steps = 25;
        config.hyper.batch_size = 16;
        config.hyper.replay_capacity = 10_000;
        config.hyper.q_hidden = [8, 8];
        config.hyper.actor_hidden = [8, 8];
        config
    }

    #[test]
    fn zero_episodes_writes_untrained_checkpoint_and_empty_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            episodes: 0,
            ..quick_config()
        };
        let artifacts = cmd_train(&config, dir.path()).unwrap();
        let checkpoint = load_checkpoint_file(&artifacts.checkpoint_path).unwrap();
        assert_eq!(checkpoint.agent.learn_counter, 0);
        let metrics = std::fs::read_to_string(&artifacts.metrics_path).unwrap();
        assert_eq!(metrics.lines().count(), 1, "header only");
    }

    #[test]
    fn identical_config_and_seed_reproduce_metrics_exactly() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let config = quick_config();
        cmd_train(&config, dir_a.path()).unwrap();
        cmd_train(&config, dir_b.path()).unwrap();
        let a = std::fs::read_to_string(dir_a.path().join("train_metrics.csv")).unwrap();
        let b = std::fs::read_to_string(dir_b.path().join("train_metrics.csv")).unwrap();
        assert_eq!(a, b);
        let ca = std::fs::read(dir_a.path().join("checkpoint.agtc")).unwrap();
        let cb = std::fs::read(dir_b.path().join("checkpoint.agtc")).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn gate_metrics_carry_the_curriculum_width() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = quick_config();
        config.suite = SuiteKind::Gate;
        config.curriculum.shrink_every = 2;
        config.episodes = 4;
        cmd_train(&config, dir.path()).unwrap();
        let metrics = std::fs::read_to_string(dir.path().join("train_metrics.csv")).unwrap();
        let mut lines = metrics.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("gate_width"));
        let widths: Vec<f64> = lines
            .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
            .collect();
        // initial = arena height 4.0, shrink 0.5 every 2 episodes
        assert_eq!(widths, vec![4.0, 4.0, 3.5, 3.5]);
    }
}
