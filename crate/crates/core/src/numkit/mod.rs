//! Linear-algebra primitives and the confluent determinant-ratio evaluator.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar) except the
//! Hermitian eigensolver (complex double) and the log-scaled determinant.

mod confluent;
mod det;
mod eigen;
mod matrix;
mod spectrum;

pub use confluent::{
    asymptotic_problem, asymptotic_ratio, clusters_as, confluent_ratio, confluent_vandermonde,
    confluent_vandermonde_log, group_nodes, grouped_vandermonde, grouped_vandermonde_log, product_kernel_partial,
    BorderedRatio, ConfluentRatioProblem, GroupedMatrix, KernelFn, NodeFn, NodeGroup, NEAR_NODE_RADIUS,
};
pub use det::{det, det_log_scaled, vandermonde, LogValue};
pub use eigen::{hermitian_eigen, hermitian_eigenvalues, hermitian_function, hermitian_sqrt, HERMITIAN_TOL};
pub use matrix::Mat;
pub use spectrum::{cluster_values, expand_clusters, Cluster, Spectrum, DEFAULT_MERGE_TOL};

/// `n!` as a double (exact up to 22!).
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!`, exact summation for small `n`, Stirling series beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 64 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) Stirling series; relative error far below 1e-16 for x ≥ 65.
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
        - 1.0 / (1680.0 * x.powi(7))
}

/// Binomial coefficient `C(n, k)` as a double.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Falling factorial `n (n−1) … (n−k+1)` for integer `n` (zero once it passes 0).
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        0.0
    } else {
        ((n - k + 1)..=n).fold(1.0, |acc, v| acc * v as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinatorics() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(2, 5), 0.0);
        assert_eq!(falling_factorial(5, 2), 20.0);
        assert_eq!(falling_factorial(2, 3), 0.0);
        assert!((ln_factorial(10) - factorial(10).ln()).abs() < 1e-13);
        let direct: f64 = (2..=100).map(|k| (k as f64).ln()).sum();
        assert!((ln_factorial(100) - direct).abs() < 1e-11);
    }
}
