use crate::exprlang::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid field spec '{spec}': {reason}")]
    FieldSpec { spec: String, reason: String },
    #[error("weights must be nonnegative and sum to 1 (sum = {sum})")]
    WeightNormalization { sum: f64 },
    #[error("Levi form needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("degenerate gradient at {point:?}: the unregularized operator is singular for p = {p} < 2")]
    DegenerateGradient { point: Vec<f64>, p: f64 },
    #[error("quadrature box does not cover the support of the bump centred at {center:?} with radius {radius}")]
    SupportNotCovered { center: Vec<f64>, radius: f64 },
    #[error("non-integrable singularity at r = 0 (local exponent {exponent:.4})")]
    NonIntegrable { exponent: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
