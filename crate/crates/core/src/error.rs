use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no manifest found at {0}")]
    ManifestMissing(PathBuf),
    #[error("malformed manifest {path}: {reason}")]
    ManifestMalformed { path: PathBuf, reason: String },
    #[error("path violation: {0}")]
    PathViolation(String),
    #[error("hash mismatch for {path}: expected {expected}, found {found}")]
    HashMismatch { path: String, expected: String, found: String },
    #[error("executor unavailable: {0}")]
    ExecutorUnavailable(String),
    #[error("execution timed out after {0} s")]
    ExecutionTimeout(u64),
    #[error("target not found for {kind} in {file}")]
    TargetNotFound { kind: String, file: String },
    #[error("inapplicable operator: {0}")]
    InapplicableOperator(String),
    #[error("no applicable target in project {0}")]
    NoApplicableTarget(String),
    #[error("recipe unsatisfiable: {0}")]
    RecipeUnsatisfiable(String),
    #[error("case generation failed for {project}/{category} seed {seed}: {source}")]
    Generation {
        project: String,
        category: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("container image missing: {0}")]
    ImageMissing(String),
    #[error("mount denied: {0}")]
    MountDenied(String),
    #[error("missing context field: {0}")]
    MissingContextField(&'static str),
    #[error("response was empty after code extraction")]
    EmptyAfterExtraction,
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("agent launch failed: {0}")]
    AgentLaunchFailure(String),
    #[error("empty record set")]
    EmptyRecordSet,
    #[error("invalid group key: {0}")]
    InvalidGroupKey(String),
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("unsupported report format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Variant name, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ManifestMissing(_) => "ManifestMissing",
            Error::ManifestMalformed { .. } => "ManifestMalformed",
            Error::PathViolation(_) => "PathViolation",
            Error::HashMismatch { .. } => "HashMismatch",
            Error::ExecutorUnavailable(_) => "ExecutorUnavailable",
            Error::ExecutionTimeout(_) => "ExecutionTimeout",
            Error::TargetNotFound { .. } => "TargetNotFound",
            Error::InapplicableOperator(_) => "InapplicableOperator",
            Error::NoApplicableTarget(_) => "NoApplicableTarget",
            Error::RecipeUnsatisfiable(_) => "RecipeUnsatisfiable",
            Error::Generation { source, .. } => source.kind(),
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::ImageMissing(_) => "ImageMissing",
            Error::MountDenied(_) => "MountDenied",
            Error::MissingContextField(_) => "MissingContextField",
            Error::EmptyAfterExtraction => "EmptyAfterExtraction",
            Error::BackendFailure(_) => "BackendFailure",
            Error::AgentLaunchFailure(_) => "AgentLaunchFailure",
            Error::EmptyRecordSet => "EmptyRecordSet",
            Error::InvalidGroupKey(_) => "InvalidGroupKey",
            Error::KeyMismatch(_) => "KeyMismatch",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "IoFailure",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn malformed(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::ManifestMalformed { path: path.into(), reason: reason.to_string() }
    }
}

/// Attaches the offending path to an `std::io::Result`.
pub trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
