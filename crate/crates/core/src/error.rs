use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in an input file could not be parsed.
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: usize,
        field: String,
        message: String,
    },

    /// A parsed record violates a domain invariant.
    #[error("{id}: {message}")]
    Invariant { id: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    /// A statistic is undefined for the given sample (zero variance, constant ranks, ...).
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("configuration: {0}")]
    Config(String),

    /// A pipeline stage ran before the stage that produces its inputs.
    #[error("stage `{stage}` requires `{required}` to run first (missing {artifact})")]
    MissingStage {
        stage: String,
        required: String,
        artifact: String,
    },

    /// Wraps an error with the episode or feature it occurred in.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    /// An internal consistency check failed.
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
