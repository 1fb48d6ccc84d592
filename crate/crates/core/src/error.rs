use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("cluster count K={k} exceeds node count n={n}")]
    TooManyClusters { k: usize, n: usize },

    #[error("network has no nodes or no layers")]
    EmptyNetwork,

    #[error("E-step produced an all -inf row for node {node}; parameters are corrupt")]
    DegenerateResponsibilities { node: usize },

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error("unknown scenario `{name}`; available presets: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed at line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
