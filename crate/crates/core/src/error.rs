use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty support at threshold {tau}")]
    EmptySupport { tau: f64 },

    /// The Gibbs kernel has a row or column that underflowed to zero.
    #[error("Gibbs kernel underflow in {axis} {index}; use the log-domain solver")]
    KernelUnderflow { axis: &'static str, index: usize },

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("combinatorial budget exceeded: {needed:.3e} > {budget:.3e}")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("cost bound violated: {0}")]
    CostBound(String),

    #[error("tuple {tuple:?} has excess {excess} < delta = {delta}")]
    NotInExcessSet {
        tuple: Vec<(usize, usize)>,
        excess: f64,
        delta: f64,
    },

    #[error("support is not infinity-cyclically monotone up to cycle length {cap}")]
    NotMonotone { cap: usize },

    #[error("zero density at cell ({0}, {1})")]
    ZeroDensity(usize, usize),

    #[error("cell set carries no mass")]
    EmptyCellMass,

    #[error("unknown instance name `{0}`")]
    UnknownInstance(String),

    #[error("nothing to emit: {0}")]
    EmptyData(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
