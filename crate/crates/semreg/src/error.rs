use std::path::PathBuf;

use semreg_core::pipeline::Stage;

/// Process exit codes. Stable across releases.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad flags, bad config values, unknown variant.
    pub const USAGE: i32 = 2;
    /// Unreadable, malformed or inconsistent input files.
    pub const INPUT: i32 = 3;
    pub const EMPTY_OVERLAP: i32 = 4;
    pub const NO_CANDIDATES: i32 = 5;
    /// Any other pipeline failure (degenerate geometry, empty cloud, ...).
    pub const PIPELINE: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed file at byte {offset}: {message}")]
    MalformedFile { path: PathBuf, offset: u64, message: String },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch { what: String, expected: usize, found: usize },
    #[error("stage `{}`: {source}", stage.name())]
    Pipeline {
        stage: Stage,
        #[source]
        source: semreg_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::MalformedFile { .. } | CliError::LengthMismatch { .. } => exit::INPUT,
            CliError::Pipeline { source, .. } => match source {
                semreg_core::Error::EmptyOverlap => exit::EMPTY_OVERLAP,
                semreg_core::Error::NoCandidates => exit::NO_CANDIDATES,
                semreg_core::Error::InvalidArgument(_) => exit::USAGE,
                _ => exit::PIPELINE,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn malformed(path: impl Into<PathBuf>, offset: u64, message: impl Into<String>) -> Self {
        CliError::MalformedFile { path: path.into(), offset, message: message.into() }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
