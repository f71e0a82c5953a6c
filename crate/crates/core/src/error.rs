use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus contains no valid records ({skipped} lines skipped)")]
    EmptyCorpus { skipped: usize },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("term `{0}` not found in vocabulary")]
    NotFound(String),

    #[error("cosine similarity is undefined for a zero vector")]
    UndefinedSimilarity,

    #[error("document `{0}` referenced by the report is not in the corpus")]
    UnknownDocId(String),

    #[error("lexicon contains no entries ({skipped} lines skipped)")]
    EmptyLexicon { skipped: usize },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("artifact {path} was produced by a different configuration (expected {expected}, found {found})")]
    Lineage {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Lineage { .. } => 1,
            Error::Io { .. }
            | Error::EmptyCorpus { .. }
            | Error::DuplicateId(_)
            | Error::EmptyVocabulary
            | Error::NotFound(_)
            | Error::UnknownDocId(_)
            | Error::EmptyLexicon { .. }
            | Error::Format { .. }
            | Error::InvalidArgument(_) => 2,
            Error::UndefinedSimilarity => 3,
        }
    }
}
