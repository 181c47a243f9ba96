use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate lattice: |det basis| = {det:.3e} below tolerance")]
    DegenerateLattice { det: f64 },

    #[error("vectors are linearly dependent")]
    DependentVectors,

    #[error("module is not saturated (elementary divisors {divisors:?})")]
    NotSaturated { divisors: Vec<i64> },

    #[error("resonance constants too small: {0}")]
    ConstantsTooSmall(String),

    #[error("symbol violates Hermitian symmetry: {0}")]
    NotSelfAdjoint(String),

    #[error("cutoff leak: denominator {denom:.3e} below guaranteed floor {floor:.3e} at {context}")]
    CutoffLeak {
        denom: f64,
        floor: f64,
        context: String,
    },

    #[error("box too small: {0}")]
    InsufficientMargin(String),

    #[error("block is trivial, nothing to reduce: {0}")]
    NothingToReduce(String),

    #[error("parameters invalid for sub-lattice: {0}")]
    ParamsInvalidForSublattice(String),

    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    #[error("no qualifying spectral gap within the 2L window at {0:.6}")]
    WindowExhausted(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
