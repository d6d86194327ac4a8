use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecradError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("point {point} is not in the domain of phi^{n}")]
    OutsideDomain { point: usize, n: usize },
    #[error("operation not supported on this backend: {0}")]
    UnsupportedBackend(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("brackets from methods `{0}` and `{1}` are disjoint")]
    ReconcileFailure(String, String),
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, SpecradError>;
