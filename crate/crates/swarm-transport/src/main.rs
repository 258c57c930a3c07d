//! Batch CLI over the library's harness entry points.
//!
//! Configuration precedence: built-in defaults, then command-line flags,
//! then the `--config` TOML file (file values win). The output directory
//! comes from `--out`, falling back to the `SWARM_TRANSPORT_OUT` environment
//! variable, then `./out`. On failure the process prints one machine-readable
//! JSON error line to stderr and exits nonzero.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use swarm_transport::coord::{CoordinationMode, GspTraining};
use swarm_transport::error::{Error, Result};
use swarm_transport::harness::{
    cmd_evaluate, cmd_probe, cmd_replay, cmd_resilience, cmd_train, ExperimentConfig, SuiteKind,
};
use swarm_transport::rl::Algorithm;

#[derive(Parser)]
#[command(
    name = "swarm-transport",
    about = "Collective-transport experiments: train, evaluate, resilience, probe, replay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write checkpoint + metrics CSV.
    Train(TrainArgs),
    /// Evaluate a checkpoint on the paired scenario stream.
    Evaluate(EvalArgs),
    /// Evaluate with robot-failure injection.
    Resilience(EvalArgs),
    /// Probe a trained prediction network with sinusoidal broadcasts.
    Probe(ProbeArgs),
    /// Validate and summarize a trajectory log.
    Replay(ReplayArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file; its values override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// dqn | ddqn | ddpg | td3
    #[arg(long)]
    algorithm: Option<String>,
    /// ic | gk | gsp
    #[arg(long)]
    mode: Option<String>,
    /// two_cylinders | four_cylinders | gate
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    n_robots: Option<usize>,
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    eval_seed: Option<u64>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// GSP training mode: regression | ddpg
    #[arg(long)]
    gsp_training: Option<String>,
    /// Any nested field as TOML, e.g. --set world.max_steps=600
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (falls back to $SWARM_TRANSPORT_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint produced by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory to dump per-episode trajectory CSVs into.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ProbeArgs {
    /// GSP checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Probe resolution over one period.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Output directory (falls back to $SWARM_TRANSPORT_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trajectory CSV written by an evaluation run.
    #[arg(long)]
    log: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let payload = serde_json::json!({
            "error": { "kind": err.kind(), "message": err.to_string() }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let out = out_dir(&args.config.out);
            let config = build_config(&args.config)?;
            let artifacts = cmd_train(&config, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "checkpoint": artifacts.checkpoint_path,
                    "metrics": artifacts.metrics_path,
                    "episodes": artifacts.episodes_run,
                    "success_rate_last_100": artifacts.final_success_rate_window,
                    "config_hash": config.hash_hex(),
                })
            );
        }
        Command::Evaluate(args) => {
            let out = out_dir(&args.config.out);
            let config = build_config(&args.config)?;
            let artifacts =
                cmd_evaluate(&args.checkpoint, &config, &out, args.trajectories.as_deref())?;
            println!(
                "{}",
                serde_json::json!({
                    "result": artifacts.json_path,
                    "episodes_csv": artifacts.csv_path,
                    "success_rate": artifacts.result.success_rate,
                })
            );
        }
        Command::Resilience(args) => {
            let out = out_dir(&args.config.out);
            let config = build_config(&args.config)?;
            let artifacts =
                cmd_resilience(&args.checkpoint, &config, &out, args.trajectories.as_deref())?;
            println!(
                "{}",
                serde_json::json!({
                    "result": artifacts.json_path,
                    "episodes_csv": artifacts.csv_path,
                    "success_rate": artifacts.result.success_rate,
                    "mean_failures": artifacts.result.mean_failures,
                })
            );
        }
        Command::Probe(args) => {
            let out = out_dir(&args.out);
            let artifacts = cmd_probe(&args.checkpoint, args.samples, &out)?;
            println!(
                "{}",
                serde_json::to_string(&artifacts.summary)
                    .map_err(|e| Error::format(e.to_string()))?
            );
        }
        Command::Replay(args) => {
            let summary = cmd_replay(&args.log)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary)
                    .map_err(|e| Error::format(e.to_string()))?
            );
        }
    }
    Ok(())
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("SWARM_TRANSPORT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Defaults -> flags -> `--set` entries -> config file (file wins).
fn build_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(v) = &args.algorithm {
        config.algorithm = parse_enum::<Algorithm>(v, "algorithm")?;
    }
    if let Some(v) = &args.mode {
        config.mode = parse_enum::<CoordinationMode>(v, "mode")?;
    }
    if let Some(v) = &args.suite {
        config.suite = parse_enum::<SuiteKind>(v, "suite")?;
    }
    if let Some(v) = &args.gsp_training {
        config.gsp_training = parse_enum::<GspTraining>(v, "gsp_training")?;
    }
    if let Some(v) = args.n_robots {
        config.n_robots = v;
    }
    if let Some(v) = args.episodes {
        config.episodes = v;
    }
    if let Some(v) = args.train_seed {
        config.train_seed = v;
    }
    if let Some(v) = args.eval_seed {
        config.eval_seed = v;
    }
    if let Some(v) = args.eval_episodes {
        config.eval_episodes = v;
    }

    for entry in &args.sets {
        let Some((key, value)) = entry.split_once('=') else {
            return Err(Error::config(format!("--set needs KEY=VALUE, got {entry:?}")));
        };
        let line = format!("{} = {}", key.trim(), value.trim());
        let quoted = format!("{} = \"{}\"", key.trim(), value.trim());
        config = config
            .with_toml_overrides(&line)
            .or_else(|_| config.with_toml_overrides(&quoted))?;
    }

    if let Some(path) = &args.config {
        config = config.load_with_file(path)?;
    }
    config.validate()?;
    Ok(config)
}

fn parse_enum<T: serde::de::DeserializeOwned>(value: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Error::config(format!("unknown {what} {value:?}")))
}
