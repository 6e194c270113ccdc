use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain invariant does not hold. `path` names the offending field.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    /// A record in a line-delimited file failed to parse or validate.
    #[error("{file}:{line}: {path}: {message}")]
    Schema {
        file: String,
        line: usize,
        path: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// The metric has no defined value for the given population.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("transport error after {attempts} attempt(s) to {endpoint}: {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },

    #[error("protocol error from {endpoint}: HTTP {status}: {body}")]
    Protocol {
        endpoint: String,
        status: u16,
        body: String,
    },

    #[error("malformed response from {endpoint}: {message}")]
    MalformedResponse { endpoint: String, message: String },

    #[error("score {score} from {source_name} is outside [0, 1]")]
    ScoreOutOfRange { source_name: String, score: f64 },

    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),

    #[error("insufficient exemplar pool: {0}")]
    InsufficientPool(String),

    #[error("scored passages do not cover example {example_id}: {message}")]
    CoverageMismatch { example_id: String, message: String },

    #[error("length mismatch: {left} scores vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("unrepresentable target: {0}")]
    Unrepresentable(String),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures worth retrying against a remote service.
    pub fn is_transport(&self) -> bool {
        matches!(self, Error::Transport { .. })
    }
}
