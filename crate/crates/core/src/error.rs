use std::fmt;
use std::path::PathBuf;

/// Architecture-string parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input where the offending token starts.
    pub position: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(position: usize, token: &str, message: impl Into<String>) -> Self {
        Self {
            position,
            token: token.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at position {} (token {:?})", self.message, self.position, self.token)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("incomplete benchmark: {count} architectures missing (e.g. {sample:?})")]
    IncompleteBenchmark { count: usize, sample: Vec<String> },

    #[error("malformed benchmark: {0}")]
    Benchmark(String),

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("search space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("degenerate statistics input: {0}")]
    Statistics(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::IncompleteBenchmark { .. } => "incomplete_benchmark",
            Error::Benchmark(_) => "benchmark",
            Error::Json { .. } => "json",
            Error::Format { .. } => "format",
            Error::SpaceMismatch(_) => "space_mismatch",
            Error::Calibration(_) => "calibration",
            Error::Statistics(_) => "statistics",
            Error::Io { .. } => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
