use thiserror::Error;

/// Errors raised while assembling, coarsening or solving.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("diffusion coefficient is {value} at {point:?}, must be positive and at least {lower_bound}")]
    CoefficientNotPositive {
        value: f64,
        point: Vec<f64>,
        lower_bound: f64,
    },

    #[error("unknown coefficient preset `{0}`")]
    UnknownPreset(String),

    #[error("coefficient preset `{name}` is not defined in dimension {dim}")]
    PresetDimension { name: String, dim: usize },

    #[error("cannot parse coefficient expression: {0}")]
    Expression(String),

    #[error("Strang correction needs a circulant or DCT-III operator")]
    StrangOnTau,

    #[error("Strang correction needs a symbol vanishing at zero, got f(0) = {0}")]
    SymbolNotSingular(f64),

    #[error("dense materialization of size {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("level chain infeasible: {0}")]
    InfeasibleChain(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("projector is rank deficient")]
    RankDeficient,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
