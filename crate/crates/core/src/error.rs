use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "eigenfrequencies not converged in charge cutoff: level {level} moved by {relative_change:.3e} (relative)"
    )]
    Convergence { level: usize, relative_change: f64 },

    #[error("quadrature did not reach tolerance: estimated error {estimate:.3e} > {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("noise embedding has negative spectral weight {weight:.3e} at bin {bin}")]
    Embedding { bin: usize, weight: f64 },

    #[error("noise correlation contract violated: {0}")]
    Contract(String),

    #[error("integration step failed at t = {time}: {reason}")]
    Step { time: f64, reason: String },

    #[error("stochastic trajectory diverged at t = {time} (|rho|_max = {norm:.3e})")]
    TrajectoryDiverged { time: f64, norm: f64 },

    #[error("too many divergent trajectories: {resampled} of {total} resampled")]
    ResampleRate { resampled: usize, total: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("pulse calibration failed: {0}")]
    Calibration(String),

    #[error("{failed} of {total} sweep points failed; first: {first}")]
    Sweep {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl Error {
    /// Process exit status: 2 for bad input, 1 for numerical or physical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Dimension { .. } | Error::Io(_) => 2,
            Error::Sweep { first, .. } => first.exit_code(),
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
