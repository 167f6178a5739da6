use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "Q-representation noise positivity violated: |A2| = {value:.6} >= 2 \
         at grid point {index} (t = {time:.6})"
    )]
    PositivityViolation { index: usize, value: f64, time: f64 },

    #[error(
        "correlation spectrum diverges at k = {k:.6}: eigenvalue pair sum {pair_sum:.3e} \
         is not negative (system at or above threshold)"
    )]
    AtThresholdDivergence { k: f64, pair_sum: f64 },

    #[error(
        "near-degenerate eigenvector basis at k = {k:.6}: condition estimate {condition:.3e}"
    )]
    NearDegeneracy { k: f64, condition: f64 },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("no sign change of the growth rate inside the pump window [{lo:.6}, {hi:.6}]")]
    NoThresholdBracket { lo: f64, hi: f64 },

    #[error(
        "ambiguous threshold: growth rate changes sign in more than one pump interval \
         ({first:?} and {second:?})"
    )]
    AmbiguousThreshold { first: (f64, f64), second: (f64, f64) },

    #[error("mode k = {k:.6} has positive growth rate {rate:.3e}; system above threshold")]
    AboveThreshold { k: f64, rate: f64 },

    #[error("insufficient samples: have {have}, need {need}")]
    InsufficientSamples { have: u64, need: u64 },

    #[error("zero or negative variance for tracked pair {0}")]
    DegenerateVariance(String),

    #[error("accumulator mismatch: {0}")]
    AccumulatorMismatch(String),

    #[error("snapshot stream: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
