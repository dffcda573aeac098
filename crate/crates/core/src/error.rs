use std::path::PathBuf;

/// Errors raised by the corpus pipeline and the scoring utilities.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("requested {requested} validation documents but only {available} are available")]
    InsufficientDocuments { requested: usize, available: usize },

    #[error("cannot identify the language of empty text")]
    EmptyText,

    #[error("language identification needs at least two profiles, got {0}")]
    NoProfiles(usize),

    #[error("invalid language profile for `{language}`: {reason}")]
    InvalidProfile { language: String, reason: String },

    #[error("tokenizer failed on document `{doc_id}`, sentence {sentence}: {reason}")]
    TokenizerFailure {
        doc_id: String,
        sentence: usize,
        reason: String,
    },

    #[error("no non-special vocabulary id is available for random replacement")]
    VocabularyTooSmall,

    #[error("step {step} is outside the schedule range [0, {total_steps}]")]
    StepOutOfRange { step: u64, total_steps: u64 },

    #[error("no predictions to score")]
    EmptyPredictions,

    #[error("label `{0}` is not part of the declared label universe")]
    UnknownLabel(String),

    #[error("curve `{model}` has {points} point(s); the area needs at least two")]
    InsufficientPoints { model: String, points: usize },

    #[error("model `{0}` appears more than once in the report")]
    DuplicateModelName(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid learning curve: {0}")]
    InvalidCurve(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoBare(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from how the tool was invoked (bad flag
    /// values, an unusable manifest) rather than from the data.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::Manifest(_) => true,
            Error::Stage { source, .. } => source.is_usage(),
            _ => false,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
