use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("registry error in {record}: {message}")]
    Registry { record: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown {kind} `{token}`")]
    Unknown { kind: &'static str, token: String },

    #[error("missing surface form for {item} in {language}")]
    MissingSurfaceForm { item: String, language: String },

    #[error("value {value} outside {scale} bounds")]
    OutOfRange { value: f64, scale: &'static str },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("mismatched keys: {0}")]
    MismatchedKeys(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no parseable chat responses; samples: {samples:?}")]
    Unparseable { samples: Vec<String> },

    #[error("rank-deficient design: collinear columns {columns:?}")]
    RankDeficient { columns: Vec<String> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
