use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("ingest error at row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("segmentation error: {0}")]
    Segmentation(String),

    #[error("window error: segment has {have} samples, needs {need} (short by {})", need - have)]
    WindowTooShort { have: usize, need: usize },

    #[error("invalid window spec: {0}")]
    WindowSpec(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("feature `{feature}` on channel {channel}: {message}")]
    Feature {
        feature: String,
        channel: String,
        message: String,
    },

    #[error("smote: {0}")]
    Smote(String),

    #[error("selection: {0}")]
    Selection(String),

    #[error("learner: {0}")]
    Learner(String),

    #[error("model payload: {0}")]
    ModelParse(String),

    #[error("unsupported model schema_version {found} (expected {expected})")]
    ModelVersion { found: u64, expected: u64 },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("rfe iteration {iteration}: {source}")]
    RfeIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("synthetic scenario: {0}")]
    Scenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error("workdir is locked by another run ({}); remove the file if no run is active", .0.display())]
    Locked(PathBuf),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn feature(feature: &str, channel: &str, message: impl Into<String>) -> Self {
        Error::Feature {
            feature: feature.to_string(),
            channel: channel.to_string(),
            message: message.into(),
        }
    }
}
