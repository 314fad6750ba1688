use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Every variant carries enough context to be rendered as a single
/// machine-readable line by the CLI (`kind()` + `Display`).
#[derive(Error, Debug)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: no data rows")]
    EmptyInput(PathBuf),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("not-enough-edges-to-train: {0}")]
    NotEnoughEdges(String),
    #[error("only {available} non-edges available, {requested} negatives requested")]
    InsufficientNonEdges { available: usize, requested: usize },
    #[error("fingerprint width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("duplicate fingerprint id `{id}` with differing bits (line {line})")]
    DuplicateFingerprint { id: String, line: usize },
    #[error("{0}: no C-alpha atoms found")]
    EmptyStructure(String),
    #[error("insufficient overlap between `{a}` and `{b}`: {pairs} aligned pairs")]
    InsufficientOverlap { a: String, b: String, pairs: usize },
    #[error("unknown {kind} `{id}`")]
    MissingNode { kind: &'static str, id: String },
    #[error("dataset contains a single class; both labels are required")]
    SingleClass,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("train and test graphs overlap: {shared_drugs} shared drugs, {shared_proteins} shared proteins")]
    OverlapViolation {
        shared_drugs: usize,
        shared_proteins: usize,
    },
    #[error("checksum mismatch for {name}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        name: String,
        expected: String,
        actual: String,
    },
    #[error("unknown dataset `{name}`; available: {}", available.join(", "))]
    UnknownDataset {
        name: String,
        available: Vec<String>,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Stable short tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::EmptyInput(_) => "empty-input",
            Error::Validation(_) => "validation",
            Error::NotEnoughEdges(_) => "not-enough-edges-to-train",
            Error::InsufficientNonEdges { .. } => "insufficient-non-edges",
            Error::WidthMismatch(..) => "width-mismatch",
            Error::DuplicateFingerprint { .. } => "duplicate-fingerprint",
            Error::EmptyStructure(_) => "empty-structure",
            Error::InsufficientOverlap { .. } => "insufficient-overlap",
            Error::MissingNode { .. } => "missing-node",
            Error::SingleClass => "single-class",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::OverlapViolation { .. } => "overlap-violation",
            Error::ChecksumMismatch { .. } => "checksum-mismatch",
            Error::UnknownDataset { .. } => "unknown-dataset",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
