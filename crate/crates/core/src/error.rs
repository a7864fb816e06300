use thiserror::Error;

/// Errors raised while building models, partitions, families and flows.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ground-set mismatch: {left} vs {right} elements")]
    GroundMismatch { left: usize, right: usize },

    #[error("empty ground set")]
    EmptyGround,

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("element {element} out of range for a set of {size} elements")]
    OutOfRange { element: usize, size: usize },

    #[error("empty hyperedge at position {0}")]
    EmptyEdge(usize),

    #[error("subset {inner:?} is not contained in {outer:?}")]
    NotSubset {
        inner: Vec<usize>,
        outer: Vec<usize>,
    },

    #[error("ordering blocks overlap on input {0}")]
    OverlappingBlocks(usize),

    #[error("too many inputs: {0} (at most {max})", max = crate::partition::MAX_INPUTS)]
    TooManyInputs(usize),

    #[error("state space too large: {size} states exceeds cap {cap}")]
    ResourceCap { size: usize, cap: usize },

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("context index {index} out of range ({size} contexts)")]
    InvalidContext { index: usize, size: usize },

    #[error("flow undefined: conditioning kernel for {coarse:?} vanishes on output block {block} where the kernel for {fine:?} is positive")]
    NotAbsolutelyContinuous {
        fine: Vec<usize>,
        coarse: Vec<usize>,
        block: usize,
    },

    #[error("stationarity residual {0:e} exceeds 1e-8")]
    NotStationary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
