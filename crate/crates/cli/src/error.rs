use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Required hypotheses that failed their sampled audit.
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Audit(Vec<AuditFailure>),

    #[error("{0}")]
    Scientific(String),

    #[error("{0}")]
    Solver(#[from] quasilin::Error),
}

impl CliError {
    /// 0 success, 1 scientific failure, 2 config error, 3 unconverged.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) if e.is_unconverged() => 3,
            _ => 1,
        }
    }

    pub fn stage(&self) -> Option<&str> {
        match self {
            CliError::Solver(e) => e.stage_name(),
            CliError::Audit(_) => Some("audit"),
            _ => None,
        }
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Error)]
#[error("hypothesis ({hypothesis}) violated{}: {detail}", witness.map_or(String::new(), |t| format!(" at t = {t:e}")))]
pub struct AuditFailure {
    pub hypothesis: String,
    pub witness: Option<f64>,
    pub detail: String,
}
