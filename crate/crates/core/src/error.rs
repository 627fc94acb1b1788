use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },

    #[error("pure-state evolution needs a lossless, fully detected cavity: {0}")]
    NotLossless(String),

    #[error("outcome probability {probability:e} for k = {k} is not positive")]
    NonPositiveProbability { k: i64, probability: f64 },

    #[error("local oscillator truncation deficit {deficit:e} exceeds {tolerance:e}")]
    Truncation { deficit: f64, tolerance: f64 },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// `line` is 0 for command-line overrides.
    #[error("{}: {message}", config_location(*line))]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_location(line: usize) -> String {
    if line == 0 {
        "command line".into()
    } else {
        format!("line {line}")
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Strips trajectory wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Trajectory { source, .. } => source.root(),
            other => other,
        }
    }
}
