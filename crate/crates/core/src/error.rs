use thiserror::Error;

pub type Result<T, E = PmcError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmcError {
    /// A caller broke a documented precondition (dimension mismatch,
    /// nonpositive variance, empty input, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Every log weight in a batch was `-inf`.
    #[error("degenerate weights: every weight is zero")]
    DegenerateWeights,

    /// A self-normalized estimate was requested with zero total weight.
    #[error("degenerate estimate: accumulated weight is zero")]
    DegenerateEstimate,

    /// An experiment or sampler configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A special function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl PmcError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Self::ContractViolation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}
