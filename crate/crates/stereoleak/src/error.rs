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
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: u64, message: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] stereoleak_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("missing results: {0}")]
    MissingResults(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(file: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, message: message.into() }
    }

    /// Short category printed with CLI failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::Format(_) => "format",
            Error::Core(_) => "data",
            Error::Config(_) => "config",
            Error::MissingResults(_) => "missing-results",
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
