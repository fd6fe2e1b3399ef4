//! Determinants, Vandermonde products and log-scaled values.

use super::Mat;
use crate::{Error, Result, Scalar, C64};

/// Determinant by Gaussian elimination with partial pivoting.
///
/// Works for any [`Scalar`]; for exact rationals the result is exact. Row
/// swaps flip the sign explicitly, so permutation matrices give exactly ±1.
pub fn det<T: Scalar>(a: &Mat<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut m: Vec<T> = a.as_slice().to_vec();
    let mut result = T::one();
    for k in 0..n {
        // Partial pivoting: largest magnitude in column k at or below row k.
        let mut piv = k;
        let mut best = m[k * n + k].magnitude();
        for i in (k + 1)..n {
            let w = m[i * n + k].magnitude();
            if w > best {
                best = w;
                piv = i;
            }
        }
        if m[piv * n + k].is_zero() {
            return Ok(T::zero());
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            result = -result;
        }
        let pivot = m[k * n + k].clone();
        for i in (k + 1)..n {
            let factor = m[i * n + k].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for j in (k + 1)..n {
                let update = factor.clone() * m[k * n + j].clone();
                m[i * n + j] = m[i * n + j].clone() - update;
            }
        }
        result = result * pivot;
    }
    Ok(result)
}

/// Vandermonde product `Δ(x) = ∏_{i>j} (x_i − x_j) = det(x_i^{j−1})`.
///
/// The empty product (length 0 or 1) is 1.
pub fn vandermonde<T: Scalar>(x: &[T]) -> T {
    let mut acc = T::one();
    for i in 0..x.len() {
        for j in 0..i {
            acc = acc * (x[i].clone() - x[j].clone());
        }
    }
    acc
}

/// A complex number stored as unit phase times `exp(log_abs)`.
///
/// Closed forms multiply determinants, Vandermonde products and factorial
/// prefactors whose individual magnitudes can overflow; composing them in
/// this form and exponentiating once at the end avoids that.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    /// Unit-modulus phase, or exactly zero.
    pub phase: C64,
    /// Natural log of the modulus (`-inf` for zero).
    pub log_abs: f64,
}

impl LogValue {
    /// The value one.
    pub const ONE: Self = Self {
        phase: C64 { re: 1.0, im: 0.0 },
        log_abs: 0.0,
    };

    /// Converts an ordinary complex number.
    pub fn from_c64(z: C64) -> Self {
        let r = z.norm();
        if r == 0.0 {
            Self {
                phase: C64::new(0.0, 0.0),
                log_abs: f64::NEG_INFINITY,
            }
        } else {
            Self {
                phase: z / r,
                log_abs: r.ln(),
            }
        }
    }

    /// Positive real `exp(l)`.
    pub fn from_ln(l: f64) -> Self {
        Self {
            phase: C64::new(1.0, 0.0),
            log_abs: l,
        }
    }

    /// `true` when the value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.phase == C64::new(0.0, 0.0)
    }

    /// Product.
    pub fn times(self, o: Self) -> Self {
        let phase = self.phase * o.phase;
        let n = phase.norm();
        if n == 0.0 {
            return Self::from_c64(C64::new(0.0, 0.0));
        }
        Self {
            phase: phase / n,
            log_abs: self.log_abs + o.log_abs,
        }
    }

    /// Quotient; errors if the divisor is zero.
    pub fn try_div(self, o: Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::Singular("divisor in log-scaled quotient"));
        }
        let phase = self.phase / o.phase;
        let n = phase.norm();
        if n == 0.0 {
            return Ok(Self::from_c64(C64::new(0.0, 0.0)));
        }
        Ok(Self {
            phase: phase / n,
            log_abs: self.log_abs - o.log_abs,
        })
    }

    /// Back to an ordinary complex number (may overflow to infinity).
    pub fn value(&self) -> C64 {
        if self.is_zero() {
            C64::new(0.0, 0.0)
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}

/// Determinant with per-column power-of-two scaling.
///
/// Each column, then each row, is divided by the power of two nearest its
/// largest modulus before elimination, and the scale is re-applied in log
/// space. This keeps
/// matrices whose columns differ by many orders of magnitude (large `x^M`
/// kernel columns next to monomials) within range.
pub fn det_log_scaled(a: &Mat<C64>) -> Result<LogValue> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut scaled = a.clone();
    let mut log_scale = 0.0;
    for j in 0..n {
        let mx = (0..n).map(|i| a[(i, j)].norm()).fold(0.0, f64::max);
        if mx == 0.0 {
            return Ok(LogValue::from_c64(C64::new(0.0, 0.0)));
        }
        if !mx.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry in determinant column {j}"
            )));
        }
        let e = mx.log2().round() as i32;
        let s = 2f64.powi(-e);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
        log_scale += f64::from(e) * std::f64::consts::LN_2;
    }
    // A second pass over rows balances nodes of very different size.
    for i in 0..n {
        let mx = (0..n).map(|j| scaled[(i, j)].norm()).fold(0.0, f64::max);
        if mx == 0.0 {
            return Ok(LogValue::from_c64(C64::new(0.0, 0.0)));
        }
        let e = mx.log2().round() as i32;
        let s = 2f64.powi(-e);
        for j in 0..n {
            scaled[(i, j)] *= s;
        }
        log_scale += f64::from(e) * std::f64::consts::LN_2;
    }
    let d = det(&scaled)?;
    let mut out = LogValue::from_c64(d);
    out.log_abs += log_scale;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    /// Cofactor-expansion oracle, independent of elimination.
    fn det_cofactor(a: &Mat<C64>) -> C64 {
        let n = a.rows();
        if n == 1 {
            return a[(0, 0)];
        }
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let minor = Mat::from_fn(n - 1, n - 1, |r, c| a[(r + 1, if c < j { c } else { c + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += a[(0, j)] * sign * det_cofactor(&minor);
        }
        acc
    }

    fn lcg_matrix(n: usize, mut s: u64) -> Mat<C64> {
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        Mat::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(det(&Mat::<C64>::identity(3)).unwrap(), C64::new(1.0, 0.0));
        let d = Mat::diag(&[C64::new(2.0, 0.0), C64::new(0.0, 3.0)]);
        assert_eq!(det(&d).unwrap(), C64::new(0.0, 6.0));
    }

    #[test]
    fn non_square_rejected() {
        let a = Mat::<f64>::zeros(2, 3);
        assert!(matches!(det(&a), Err(Error::NotSquare { rows: 2, cols: 3 })));
    }

    #[test]
    fn permutation_sign_exact() {
        let p = Mat::from_fn(3, 3, |i, j| if j == (i + 1) % 3 { 1.0 } else { 0.0 });
        assert_eq!(det(&p).unwrap(), 1.0);
        let s = Mat::from_fn(3, 3, |i, j| {
            if (i, j) == (0, 1) || (i, j) == (1, 0) || (i, j) == (2, 2) {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(det(&s).unwrap(), -1.0);
    }

    #[test]
    fn random_5x5_matches_cofactor_oracle() {
        for seed in 1..6 {
            let a = lcg_matrix(5, seed);
            let d = det(&a).unwrap();
            let o = det_cofactor(&a);
            assert!((d - o).norm() <= 1e-9 * o.norm(), "{d} vs {o}");
        }
    }

    #[test]
    fn exact_rational_determinant() {
        let q = |n: i64, d: i64| Rational::new(BigInt::from(n), BigInt::from(d));
        let a = Mat::from_vec(2, 2, vec![q(1, 2), q(1, 3), q(1, 4), q(1, 5)]).unwrap();
        assert_eq!(det(&a).unwrap(), q(1, 10) - q(1, 12));
    }

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(vandermonde(&[5.0]), 1.0);
        assert_eq!(vandermonde::<f64>(&[]), 1.0);
    }

    #[test]
    fn vandermonde_matches_dense_determinant() {
        let x: [f64; 4] = [0.3, -1.2, 2.5, 0.9];
        let v = Mat::from_fn(4, 4, |i, j| x[i].powi(j as i32));
        let d = det(&v).unwrap();
        assert!((vandermonde(&x) - d).abs() <= 1e-10 * d.abs());
    }

    #[test]
    fn log_scaled_matches_plain() {
        let mut a = lcg_matrix(4, 9);
        for i in 0..4 {
            a[(i, 2)] *= 1e150;
            a[(i, 0)] *= 1e-150;
        }
        let plain = det(&a).unwrap();
        let lv = det_log_scaled(&a).unwrap();
        assert!((lv.value() - plain).norm() <= 1e-12 * plain.norm());
    }

    #[test]
    fn unitary_determinant_has_unit_modulus() {
        let th = 0.7f64;
        let u = Mat::from_vec(
            2,
            2,
            vec![
                C64::new(th.cos(), 0.0),
                C64::new(0.0, th.sin()),
                C64::new(0.0, th.sin()),
                C64::new(th.cos(), 0.0),
            ],
        )
        .unwrap();
        assert!((det(&u).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn vandermonde_is_antisymmetric(x in proptest::collection::vec(-3.0f64..3.0, 2..6), i in 0usize..6, j in 0usize..6) {
            let n = x.len();
            let (i, j) = (i % n, j % n);
            prop_assume!(i != j);
            let mut y = x.clone();
            y.swap(i, j);
            let a = vandermonde(&x);
            let b = vandermonde(&y);
            prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn det_is_multiplicative(s1 in 1u64..1000, s2 in 1u64..1000) {
            let a = lcg_matrix(3, s1);
            let b = lcg_matrix(3, s2);
            let ab = det(&a.matmul(&b).unwrap()).unwrap();
            let prod = det(&a).unwrap() * det(&b).unwrap();
            prop_assert!((ab - prod).norm() <= 1e-10 * (1.0 + prod.norm()));
        }
    }
}
