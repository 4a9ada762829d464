//! File formats, configuration and subcommands for the `mintori` binary.

pub mod commands;
pub mod config;
pub mod meshio;
pub mod output;
pub mod report;
pub mod svg;

use mintori_core::Error;

/// Failure classes, each with a fixed process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("inadmissible: {0}")]
    Admissibility(String),
    #[error("scan failed: {0}")]
    Scan(String),
    #[error("bracket: {0}")]
    Bracket(String),
    #[error("closure: {0}")]
    Closure(String),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Admissibility(_) => 2,
            CliError::Scan(_) => 3,
            CliError::Bracket(_) => 4,
            CliError::Closure(_) => 5,
            CliError::Certification(_) => 6,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Short, stable name of a core error variant for logs.
pub fn error_class(e: &Error) -> &'static str {
    match e {
        Error::DegenerateInput(_) => "degenerate-input",
        Error::Dimension { .. } => "dimension",
        Error::BaseMismatch => "base-mismatch",
        Error::Regularity(_) => "regularity",
        Error::Domain(_) => "domain",
        Error::Inadmissible(_) => "inadmissible",
        Error::WitnessNotFound => "witness-not-found",
        Error::Membership { .. } => "membership",
        Error::SingularField => "singular-field",
        Error::ModelViolation(_) => "model-violation",
        Error::IntegrationDiverged { .. } => "integration-diverged",
        Error::StepLimit(_) => "step-limit",
        Error::StepUnderflow(_) => "step-underflow",
        Error::EndpointHit => "endpoint-hit",
        Error::Bracket { .. } => "bracket",
        Error::Closure { .. } => "closure",
        Error::Refinement => "refinement",
        Error::DegenerateMesh(_) => "degenerate-mesh",
        Error::Resolution { .. } => "resolution",
    }
}
