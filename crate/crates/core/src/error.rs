use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid hyperparameters, shapes, or settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// A config or command-line value that could not be understood.
    #[error("usage error: {0}")]
    Usage(String),

    /// Missing, malformed, or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    /// A non-finite value appeared during computation.
    #[error("numeric failure in {stage}: {detail}")]
    Numeric { stage: String, detail: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn numeric(stage: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            stage: stage.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message with the pipeline stage that produced it.
    pub fn context(self, stage: &str) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{stage}: {m}")),
            Error::Usage(m) => Error::Usage(format!("{stage}: {m}")),
            Error::Data(m) => Error::Data(format!("{stage}: {m}")),
            Error::Numeric { stage: inner, detail } => Error::Numeric {
                stage: format!("{stage}/{inner}"),
                detail,
            },
            io @ Error::Io { .. } => Error::Data(format!("{stage}: {io}")),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 1,
            Error::Data(_) | Error::Io { .. } => 2,
            Error::Numeric { .. } => 3,
        }
    }
}
