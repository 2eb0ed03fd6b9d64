use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("mass matrix is not positive definite")]
    SingularMassMatrix,

    #[error("non-finite value detected in {0}")]
    NonFinite(&'static str),

    #[error("simulation diverged: generalized speed {0:.3e}")]
    Diverged(f64),

    #[error("cell ({0}, {1}) is occupied or outside the grid")]
    BlockedEndpoint(usize, usize),

    #[error("goal is unreachable from start")]
    Unreachable,

    #[error("waypoint spacing [{min}, {max}] is infeasible for cell size {cell_size}")]
    InfeasibleSpacing { min: f64, max: f64, cell_size: f64 },

    #[error("grid format error: {0}")]
    GridFormat(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name: name.into(),
        reason: reason.into(),
    }
}
