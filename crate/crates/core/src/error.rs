use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("graph generation failed after {attempts} disconnected draws")]
    GenerationFailed { attempts: usize },

    #[error("vertex {0} has zero degree")]
    IsolatedVertex(usize),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dual ascent did not converge after {iterations} sweeps")]
    NonConvergence { iterations: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the LP/QP solvers or the eigensolver, as opposed to
    /// bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::NumericalFailure(_) | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
