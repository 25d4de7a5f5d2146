use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible coefficient specification: {0}")]
    Infeasible(String),

    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),

    #[error("unsupported Minkowski combination: {0}")]
    UnsupportedCombination(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
