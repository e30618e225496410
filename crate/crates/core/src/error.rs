use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite gradient in {param} at flat index {index}")]
    NonFiniteGradient { param: String, index: usize },

    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("no samples for class")]
    NoSamples,

    #[error("no exemplars cached for class {0}")]
    EmptyClass(u32),

    #[error("class {0} is already present in the exemplar store")]
    DuplicateClass(u32),

    #[error("feature is not unit-norm: measured norm {norm}")]
    NotUnitNorm { norm: f64 },

    #[error("sample {sample} has no modality {modality}")]
    MissingModality { sample: u64, modality: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("split error: {0}")]
    Split(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("task {task}: {source}")]
    Task {
        task: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Shape {
            context: context.into(),
            expected,
            found,
        }
    }

    pub(crate) fn in_task(self, task: usize) -> Self {
        match self {
            e @ Error::Task { .. } => e,
            other => Error::Task {
                task,
                source: Box::new(other),
            },
        }
    }
}
