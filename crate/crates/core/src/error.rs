use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("empty series")]
    EmptySeries,

    #[error("timestamps must be strictly increasing (sample {index}: {prev} -> {next})")]
    NonIncreasingTimestamps { index: usize, prev: f64, next: f64 },

    #[error("occupancy has {found} bins but the gain table has {expected}")]
    OccupancyLength { expected: usize, found: usize },

    #[error("change rate inputs must be strictly positive (delta_g={delta_g}, m={m}, mu_r={mu_r})")]
    ChangeRateInput { delta_g: f64, m: f64, mu_r: f64 },

    #[error("no feasible task after {draws} draws")]
    TaskRejectionCap { draws: usize },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the caller's input rather than the environment.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
