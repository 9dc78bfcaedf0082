use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("attack infeasible: {0}")]
    Infeasible(String),

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("no boundary root: {0}")]
    NoRoot(String),

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("Z and X efficiency columns differ at sample {0}")]
    BasisMismatch(usize),

    #[error("truncated space dimension {dim} exceeds limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoSignChange { .. }
                | Error::NoRoot(_)
                | Error::NoConvergence(_)
                | Error::Singular
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
