use std::path::PathBuf;

/// Errors surfaced by the file formats and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<Error> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] subtrack_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status: 2 for configuration, input and IO problems, 3
    /// for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use subtrack_core::Error as E;
        match self {
            Error::InFile { source, .. } => source.exit_code(),
            Error::Core(E::Singular { .. } | E::NoConvergence { .. } | E::BacktrackingCap { .. } | E::EmptyHistory) => 3,
            _ => 2,
        }
    }
}
