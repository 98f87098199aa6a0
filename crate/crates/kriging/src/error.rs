use thiserror::Error;

/// Errors produced by this crate.
///
/// Variants split into two families so callers (notably the CLI) can map them
/// onto exit codes: usage errors (invalid parameters, dimension mismatches,
/// malformed input) and numeric/conditioning errors (the computation itself is
/// not safely possible).
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Wrong vector/matrix dimension for the operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A parameter violates its precondition (non-positive scale, bad bound…).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix handed to the eigendecomposition is not symmetric.
    #[error(
        "matrix is not symmetric: max |C[i][j] - C[j][i]| = {max_asymmetry:.3e} \
         exceeds {tolerance:.3e}"
    )]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },

    /// The matrix is too ill-conditioned for the requested operation. The
    /// eigenvalue gap is reported so the caller can pick a remedy (switch to
    /// the pseudoinverse policy or add a nugget).
    #[error(
        "covariance matrix too ill-conditioned: condition number {condition:.3e} exceeds \
         {limit:.3e} (eigenvalues span {lambda_max:.6e} down to {lambda_min:.6e})"
    )]
    IllConditioned {
        condition: f64,
        limit: f64,
        lambda_max: f64,
        lambda_min: f64,
    },

    /// A numeric failure not tied to conditioning (solver breakdown,
    /// non-finite objective, …).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed external input (CSV/JSON).
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors the caller caused (bad arguments or input), as opposed
    /// to numeric/conditioning failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::NotSymmetric { .. }
                | Error::Parse(_)
        )
    }
}
