use thiserror::Error;

/// Errors raised by the solvers and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state left the admissible set (nonpositive density or pressure, wrong dimension).
    #[error("inadmissible state: {component} = {value:e}")]
    Domain { component: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular linear system (pivot {pivot:e} at row {row}, pivot ratio {ratio:e})")]
    Singular { row: usize, pivot: f64, ratio: f64 },

    #[error("no transonic solution: {0}")]
    NoTransonicSolution(String),

    #[error("no interior layer found: {0}")]
    NoInteriorLayer(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
