use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A distribution or model parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A point, window or argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed input data (NaN, too few samples, mismatched lengths).
    #[error("invalid input: {0}")]
    Input(String),
    /// Input is constant or otherwise carries no information for the test.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An experiment or checker configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Too many replicas hit the truncation edge.
    #[error("only {clean} of {total} replicas were uncontaminated (quota {quota:.2}); enlarge the margin")]
    QuotaUnmet {
        clean: usize,
        total: usize,
        quota: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
