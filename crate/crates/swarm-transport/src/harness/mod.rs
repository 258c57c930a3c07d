//! Batch experiment front-end: configuration, training and evaluation
//! campaigns, the probe, and trajectory replay. The CLI binary is a thin
//! wrapper over these entry points.

mod config;
mod evaluate;
mod probe;
mod replay;
mod report;
mod train;

pub use config::{CurriculumConfig, ExperimentConfig, FailureConfig, SuiteKind};
pub use evaluate::{
    check_compatible, cmd_evaluate, cmd_resilience, evaluate_checkpoint, EvaluateArtifacts,
};
pub use probe::{cmd_probe, ProbeArtifacts, ProbeSummary};
pub use replay::{cmd_replay, ReplaySummary};
pub use report::{CampaignResult, EpisodeRecord, MetricsWriter};
pub use train::{cmd_train, TrainArtifacts};
