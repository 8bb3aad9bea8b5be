use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("zero denominator while computing {0}")]
    ZeroDenominator(&'static str),
    #[error("no valid candidate among {0} generated rectangles")]
    NoValidCandidate(usize),
    #[error("bound beta = {beta} is infeasible for the step-height penalty (|G/H| = {limit}); use a larger beta")]
    InfeasibleBeta { beta: f64, limit: f64 },
    #[error("enumeration over {0} features is too large (limit 20); use the model-based method")]
    TooManyFeatures(usize),
    #[error("{0}")]
    Unsupported(String),
}
