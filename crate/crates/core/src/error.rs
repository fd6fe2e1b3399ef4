//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Each variant names the offending quantity so that callers (the CLI in
/// particular) can map failures to exit codes and report them verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A square matrix was required.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// Operand shapes do not fit together.
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// A matrix tagged Hermitian is not.
    #[error("matrix is not Hermitian: |A[{row}][{col}] - conj(A[{col}][{row}])| = {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    /// A matrix required to be positive definite has a non-positive eigenvalue.
    #[error("matrix is not positive definite: eigenvalue #{index} = {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    /// A column function cannot supply the derivative a confluent limit needs.
    #[error("column function {function} has no derivative of order {order}")]
    DerivativeUnavailable { function: usize, order: usize },

    /// Not enough asymptotic coefficients for the number of nodes sent to infinity.
    #[error("function {function} supplies {supplied} tail coefficients, {required} required")]
    InsufficientTail {
        function: usize,
        supplied: usize,
        required: usize,
    },

    /// An argument lies outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A defining integral diverges for the requested parameters.
    #[error("divergent parameters: {0}")]
    Divergent(String),

    /// Adaptive quadrature hit its subdivision limit before meeting tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// An iterative or extrapolation scheme failed to converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A determinant that must be nonzero vanished (e.g. a singular denominator).
    #[error("singular {0}")]
    Singular(&'static str),
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
