use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature on [{a}, {b}] did not reach relative tolerance {tol:e} (error estimate {estimate:e})")]
    Quadrature {
        a: f64,
        b: f64,
        tol: f64,
        estimate: f64,
    },

    #[error("structural failure: {0}")]
    Structural(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("eigen iteration did not converge after {iters} iterations (last Rayleigh change {last_change:e})")]
    EigenNotConverged { iters: usize, last_change: f64 },

    #[error("missing certificate: {0}")]
    MissingCertificate(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not converged: {0}")]
    Unconverged(String),

    /// Failure inside a multi-stage pipeline, tagged with the stage name.
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
}

impl Error {
    pub fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            message: err.to_string(),
        }
    }

    /// True when the failure is non-convergence, possibly inside a stage.
    pub fn is_unconverged(&self) -> bool {
        match self {
            Error::Unconverged(_) | Error::EigenNotConverged { .. } => true,
            Error::Stage { message, .. } => message.starts_with("not converged"),
            _ => false,
        }
    }

    /// Stage tag if this error came out of a pipeline.
    pub fn stage_name(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
