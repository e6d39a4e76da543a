use std::path::PathBuf;

/// Errors surfaced by the simulator front end.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("malformed trajectory file {path}: {message}")]
    Trajectory { path: PathBuf, message: String },
    #[error("no record at t = {0} in the trajectory")]
    TimeNotFound(f64),
    #[error("trajectory cell centers do not match the scenario grid")]
    GridMismatch,
    #[error("oracle evaluated outside its validity window at x = {x}, t = {t}")]
    OutsideValidity { x: f64, t: f64 },
    #[error(transparent)]
    Core(#[from] hydrate_core::Error),
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
