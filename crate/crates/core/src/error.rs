use thiserror::Error;

/// Errors raised by scoring, estimation, band construction and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A benchmark column whose mean is not strictly positive, so the skill
    /// score (or relative accuracy) is undefined.
    #[error("degenerate benchmark: mean of column `{column}` is {mean}{}", replicate_suffix(*.replicate))]
    DegenerateBenchmark {
        column: String,
        mean: f64,
        replicate: Option<usize>,
    },

    /// Bootstrap standard deviation of an entry is zero.
    #[error("zero bootstrap standard deviation for entry {entry} ({label})")]
    ZeroSigma { entry: usize, label: String },

    #[error("duplicate cell {key} at rows {first} and {second}")]
    DuplicateKey {
        key: String,
        first: usize,
        second: usize,
    },

    #[error("incomplete panel: missing cell {0}")]
    Incomplete(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn replicate_suffix(replicate: Option<usize>) -> String {
    match replicate {
        Some(b) => format!(" in bootstrap replicate {b}"),
        None => String::new(),
    }
}

impl Error {
    /// Short machine-readable category, used by the CLI for its error line
    /// and exit status.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DegenerateBenchmark { .. } => "degenerate-benchmark",
            Error::ZeroSigma { .. } => "zero-sigma",
            Error::DuplicateKey { .. } => "duplicate-key",
            Error::Incomplete(_) => "incomplete",
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
