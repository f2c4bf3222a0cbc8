use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SpdeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpdeError {
    #[error("mode index must be at least 1, got {0}")]
    ZeroMode(usize),

    #[error("mode index {index} out of range 1..={max}")]
    ModeOutOfRange { index: usize, max: usize },

    #[error("time must be nonnegative and finite, got {0}")]
    InvalidTime(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("grid of {grid_size} nodes cannot resolve {n_modes} modes without aliasing")]
    Aliasing { grid_size: usize, n_modes: usize },

    #[error("coarsening factor {factor} does not divide {steps} fine steps")]
    Coarsening { steps: usize, factor: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Domain(String),

    #[error("nonlinearity overflowed{}", match .step { Some(s) => format!(" at step {s}"), None => String::new() })]
    Diverged { step: Option<usize> },

    #[error("slope fit needs at least 2 points with positive error, got {usable} ({detail})")]
    Fit { usable: usize, detail: String },

    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("failed to parse config: {0}")]
    ConfigSyntax(#[from] toml::de::Error),

    #[error("failed to serialize config: {0}")]
    ConfigEmit(#[from] toml::ser::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Replay(String),
}

impl SpdeError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        SpdeError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpdeError::Io {
            path: path.into(),
            source,
        }
    }
}
