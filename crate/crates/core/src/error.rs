use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite derivative in channel {channel}")]
    NonFiniteDerivative { channel: usize },

    #[error("model not mean-parameterized")]
    NotMeanParameterized,

    #[error("quadrature unavailable: {0}")]
    QuadratureUnavailable(String),

    #[error("CRLB undefined: {0}")]
    SingularFisher(String),

    #[error("Stam undefined: non-causal channel(s) {channels:?}")]
    StamUndefined { channels: Vec<usize> },

    #[error("truncation too aggressive: grid covers mass {covered:.3e}, need >= {required:.3e}")]
    TruncationTooAggressive { covered: f64, required: f64 },

    #[error("field not normalized: measured norm {measured}")]
    NotNormalized { measured: f64 },

    #[error("negative probability {value} at cell {cell}")]
    NegativeProbability { value: f64, cell: usize },

    #[error("boosted support leaves the grid: lost mass fraction {lost:.3e}")]
    BoostLeavesGrid { lost: f64 },

    #[error("negative mass {0}")]
    NegativeMass(f64),

    #[error("estimator output shape mismatch: {0}")]
    EstimatorShape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
