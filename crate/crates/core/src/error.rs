use thiserror::Error;

/// Errors raised by constructions, solvers and I/O in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("labeling does not match the base graph: {0}")]
    LabelingMismatch(String),

    #[error("invalid compression: {0}")]
    InvalidCompression(String),

    #[error("labeling is not compressible under the given compression")]
    IncompressibleLabeling,

    #[error("invalid twisting: {0}")]
    InvalidTwisting(String),

    #[error("no pairwise coprime set of size {k} exists in [{lo}, {hi}]")]
    NoCoprimeSet { k: usize, lo: u64, hi: u64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("state space too large: {measured} exceeds cap {cap}")]
    StateSpaceTooLarge { measured: u128, cap: u128 },

    #[error("formula is satisfiable; the Prover-Delayer game need not terminate")]
    SatisfiableFormula,

    #[error("formula too large for the exact oracle: {vars} variables (cap {cap})")]
    TooLarge { vars: usize, cap: usize },

    #[error("strategy fault: {0}")]
    Strategy(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
