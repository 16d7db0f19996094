use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus: {0}")]
    InvalidTorus(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("time step {dt:.3e} exceeds stability bound {bound:.3e}")]
    TimeStepTooLarge { dt: f64, bound: f64 },
    #[error("flow aborted: {0}")]
    FlowAborted(String),
    #[error("lie structure: {0}")]
    Lie(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
