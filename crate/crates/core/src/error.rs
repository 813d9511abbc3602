use thiserror::Error;

/// Errors raised by the design, dynamics, photonics and tomography routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PstError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported parametrization: {0}")]
    UnsupportedParametrization(String),

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("empty post-selection: success probability {probability:e} is below threshold")]
    EmptyPostselection { probability: f64 },

    #[error("invalid measurement record: {0}")]
    InvalidRecord(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl PstError {
    /// True for failures that come out of a numerical procedure rather than
    /// from a bad input (search did not converge, nothing survived
    /// post-selection).
    pub fn is_numerical(&self) -> bool {
        matches!(self, PstError::SearchFailure(_) | PstError::EmptyPostselection { .. })
    }
}

pub type Result<T> = std::result::Result<T, PstError>;
