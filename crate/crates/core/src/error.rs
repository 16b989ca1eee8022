use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a domain constraint (non-positive rate, empty
    /// cluster, probability outside `[0, 1]`, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A zero-load worker has no run-time; callers must filter these out.
    #[error("worker load must be at least one row")]
    ZeroLoad,

    /// The root finder could not bracket or reduce the residual.
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A linear system was singular to working precision. Only reachable with
    /// degenerate hand-built coding matrices.
    #[error("linear system is singular to working precision (pivot {0:e})")]
    Singular(f64),

    /// Asked for more rows than the allocation provides.
    #[error("need {needed} rows but the allocation only provides {available}")]
    Undecodable { needed: u64, available: u64 },

    /// Scenario name not in the builtin registry.
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    /// Scenario config failed validation; one message per offending field.
    #[error("invalid scenario config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    /// Scenario file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// Matrix file I/O or format errors.
    #[error("matrix file error: {0}")]
    MatrixFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
