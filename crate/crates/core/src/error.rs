use std::path::PathBuf;

use thiserror::Error;

use crate::lexicon::Language;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file is not valid UTF-8")]
    NonUtf8 { path: PathBuf },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("line-count mismatch: {lang_a} has {count_a} lines, {lang_b} has {count_b}")]
    LineCountMismatch {
        lang_a: Language,
        count_a: usize,
        lang_b: Language,
        count_b: usize,
    },

    #[error("duplicate language code '{0}'")]
    DuplicateLanguage(Language),

    #[error("at least two languages are required, got {0}")]
    TooFewLanguages(usize),

    #[error("unknown language code '{0}'")]
    UnknownLanguage(Language),

    #[error("invalid embedding set: {0}")]
    InvalidEmbeddings(String),

    #[error("ragged dimensions: line {line} has dimension {found}, expected {expected}")]
    RaggedDimensions {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing embedding for word '{word}' in language '{language}'")]
    MissingEmbedding { word: String, language: Language },

    #[error("zero vector{}: cosine distance is undefined", .word.as_ref().map(|w| format!(" for word '{w}'")).unwrap_or_default())]
    ZeroVector { word: Option<String> },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("insufficient vocabulary: language '{language}' has {distinct} distinct embedding(s), need at least 2")]
    InsufficientVocabulary { language: Language, distinct: usize },

    #[error("intra-lingual spread must be positive, got {0}")]
    NonPositiveIntra(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incomplete batch: provider returned {returned} vectors for {requested} inputs")]
    IncompleteBatch { requested: usize, returned: usize },

    #[error("http request failed after {attempts} attempt(s): {message}")]
    Http { attempts: usize, message: String },

    #[error("cache record {path} is corrupt: {message}")]
    CorruptCache { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported output format '{0}'")]
    UnsupportedFormat(String),

    #[error("rendering failed: {0}")]
    Render(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
