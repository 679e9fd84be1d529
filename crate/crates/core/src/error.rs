use std::fmt;

/// Pipeline stage attached to errors raised during an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingestion,
    Preprocessing,
    Split,
    Embedding,
    Training,
    Estimation,
    Thresholding,
    Metrics,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ingestion => "ingestion",
            Stage::Preprocessing => "preprocessing",
            Stage::Split => "split",
            Stage::Embedding => "embedding",
            Stage::Training => "training",
            Stage::Estimation => "estimation",
            Stage::Thresholding => "thresholding",
            Stage::Metrics => "metrics",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate embedding: every cosine feature is zero")]
    DegenerateEmbedding,

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// `row` is the 1-based data row; 0 marks file-level problems.
    #[error("{}", ingestion_message(path, *row, column, message))]
    Ingestion {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Tags the error with the pipeline stage it came from. Already-tagged
    /// errors keep their original stage.
    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The stage tag, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

fn ingestion_message(path: &str, row: usize, column: &str, message: &str) -> String {
    match (row, column.is_empty()) {
        (0, true) => format!("{path}: {message}"),
        (0, false) => format!("{path}: column {column}: {message}"),
        (_, true) => format!("{path}: row {row}: {message}"),
        _ => format!("{path}: row {row}, column {column}: {message}"),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
