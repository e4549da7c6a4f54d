use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown target {target:?} (not a participant of event {event_id:?})")]
    UnknownTarget { target: String, event_id: String },

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("invalid lexicon entry at line {line}: {message}")]
    Lexicon { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty training data")]
    EmptyData,

    #[error("vocabulary has no terms for feature set {0}")]
    EmptyVocabulary(String),

    #[error("unknown feature set {0:?} (expected one of f1..f6)")]
    UnknownFeatureSet(String),

    #[error("feature set {0} needs fitted document embeddings or topics")]
    FeatureSetUnavailable(String),

    #[error("dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data contains a single class; at least two are required")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature {index} has negative value {value}; multinomial naive Bayes needs counts")]
    NegativeFeature { index: usize, value: f64 },

    #[error("invalid label set: {0}")]
    InvalidLabelSet(String),

    #[error("length mismatch: {0} truth rows vs {1} predicted rows")]
    LengthMismatch(usize, usize),

    #[error("query {0:?} has no relevant items")]
    NoRelevantItems(String),

    #[error("event {0:?} has no expert announcement time")]
    MissingAnnouncement(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("model bundle: {0}")]
    Bundle(String),

    #[error("feature registry hash mismatch: bundle header {expected}, payload {actual}")]
    HashMismatch { expected: String, actual: String },

    #[error("model kind mismatch: {0}")]
    ModelKind(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFinite(_) => ErrorClass::Numeric,
            Error::UnknownFeatureSet(_)
            | Error::FeatureSetUnavailable(_)
            | Error::InvalidConfig(_)
            | Error::ModelKind(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}
