use thiserror::Error;

/// Errors produced by case ingestion, model construction, constraint
/// evaluation and the solver.
#[derive(Debug, Error)]
pub enum CoreError {
    /// The case or config document does not match the schema.
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally invalid network (bad ids, disconnected graph, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// Vector/matrix dimensions do not match the case.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Degenerate input (zero variance where a spread is required).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Invalid or incomplete run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid usage of an operation (e.g. too few reports to compare).
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
