//! Hermitian eigendecomposition and matrix functions.
//!
//! Backed by nalgebra's symmetric/Hermitian QR iteration; this module adds
//! the input checks, descending ordering and the positive-definiteness
//! report the closed forms rely on.

use super::{Mat, Spectrum};
use crate::{ComplexMatrix, Error, Result, C64};

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues (descending) and matching orthonormal eigenvectors (columns).
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    a.check_hermitian(HERMITIAN_TOL)?;
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    // Symmetrise exactly so the solver sees a Hermitian input.
    let sym = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Positive eigenvalues of a Hermitian positive-definite matrix.
///
/// Fails with [`Error::NotPositiveDefinite`] naming the first non-positive
/// eigenvalue (in descending order).
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Spectrum> {
    let (values, _) = hermitian_eigen(a)?;
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NotPositiveDefinite { index, value });
    }
    Spectrum::new(values)
}

/// `Q f(Λ) Q†` for a Hermitian `A = QΛQ†`.
pub fn hermitian_function(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (values, q) = hermitian_eigen(a)?;
    let n = values.len();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n).fold(C64::new(0.0, 0.0), |acc, k| {
            acc + q[(i, k)] * f(values[k]) * q[(j, k)].conj()
        })
    }))
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Tiny negative eigenvalues from round-off are clamped to zero.
pub fn hermitian_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(a, |v| v.max(0.0).sqrt())
}
