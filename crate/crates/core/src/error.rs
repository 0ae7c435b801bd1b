use thiserror::Error;

/// Errors raised by the toolkit. Numeric failures carry the measured quantity
/// that tripped the check so callers can report it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("block index {index} out of range for {count} blocks")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("sequence is not a g-frame (lower bound {lower:.3e}, upper bound {upper:.3e})")]
    SingularFrame { lower: f64, upper: f64 },

    #[error("symbol is not semi-normalized (min sigma {lower:.3e}, max sigma {upper:.3e})")]
    NotSemiNormalized { lower: f64, upper: f64 },

    #[error("{what} is singular (sigma_min / sigma_max = {ratio:.3e})")]
    Singular { what: &'static str, ratio: f64 },

    #[error("block {block} admits no positive factorization: {reason}")]
    Factorization { block: usize, reason: String },

    #[error("{which} is not a g-Riesz basis")]
    NotGRiesz { which: &'static str },

    #[error("perturbation too large: mu = {mu:.6e} >= sqrt(A) = {sqrt_lower:.6e}")]
    PerturbationTooLarge { mu: f64, sqrt_lower: f64 },

    #[error("sequences are not a dual pair (residual {residual:.3e})")]
    NotDual { residual: f64 },

    #[error("sufficient condition not met: mu = {mu:.6e} >= 1")]
    ConditionNotMet { mu: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
