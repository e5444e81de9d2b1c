use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("derivative order {0} not available (maximum is 3)")]
    Order(usize),
    #[error("state left the model bounding box: {0}")]
    Domain(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unsupported Floquet spectrum: {0}")]
    UnsupportedSpectrum(String),
    #[error("resonant periodic solve at order {order} (distance {distance:.3e})")]
    Resonance { order: usize, distance: f64 },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("isostable asymptote (condition number {0:.3e})")]
    Asymptote(f64),
    #[error("no phase-locked state: frequency spread {0:.3e}")]
    NoLockedState(f64),
    #[error("trajectory diverged at t = {0}")]
    Divergence(f64),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Order(_) | Error::Json(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
