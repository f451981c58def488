use thiserror::Error;

/// Errors surfaced by the selection and evaluation pipeline.
///
/// Validation problems (`InvalidArgument`, `DimensionMismatch`, `Parse`,
/// `NonFinite`) come from bad user input; `Numerical` and `Infeasible`
/// indicate a computation that could not be completed on valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("enumeration guard: C({n}, {p}) = {count} exceeds limit {limit}")]
    CombinatorialGuard {
        n: usize,
        p: usize,
        count: u128,
        limit: u64,
    },

    #[error("{path}:{line}: {what}")]
    Parse {
        path: String,
        line: usize,
        what: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("linear algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True when the error is a user/input problem rather than a numerical one.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch(_)
                | Error::NonFinite(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::CombinatorialGuard { .. }
        )
    }
}
