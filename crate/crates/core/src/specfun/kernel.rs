//! The `F(x, z)` kernel, the Tricomi function `Ψ` and their derivatives.
//!
//! Both families are Laplace-type integrals of `(1+λ)^w` against
//! exponential weights. Real non-negative integer exponents admit finite
//! closed forms (binomial expansion); every other exponent, in particular
//! complex `z` on the imaginary axis, goes through the defining integral.

use super::ei::e1_scaled;
use super::{integrate_semi_infinite, integrate_semi_infinite_split, Quadrature, QuadratureSettings};
use crate::numkit::{binomial, factorial, falling_factorial};
use crate::{Error, Result, C64};

/// `Γ(a, x) = (a−1)! e^{−x} Σ_{k<a} x^k/k!` for integer `a ≥ 1`, `x ≥ 0`.
pub fn upper_incomplete_gamma(a: usize, x: f64) -> Result<f64> {
    Ok(upper_incomplete_gamma_scaled(a, x)? * (-x).exp())
}

/// `e^{x} Γ(a, x)` for integer `a ≥ 1`, `x ≥ 0`.
pub fn upper_incomplete_gamma_scaled(a: usize, x: f64) -> Result<f64> {
    if a == 0 {
        return Err(Error::InvalidArgument("incomplete gamma needs a ≥ 1".into()));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "incomplete gamma needs a finite x ≥ 0, got {x}"
        )));
    }
    // Horner form of Σ_{k<a} (a−1)!/k! x^k.
    let mut acc = 1.0;
    for k in (1..a).rev() {
        acc = 1.0 + acc * x / k as f64;
    }
    Ok(acc * factorial(a - 1))
}

/// If `z` is a real non-negative integer, that integer.
pub fn as_nonnegative_integer(z: C64) -> Option<usize> {
    (z.im == 0.0 && z.re >= 0.0 && z.re.fract() == 0.0 && z.re < 1e6).then_some(z.re as usize)
}

fn check_kernel_args(x: f64, z: C64, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("kernel F needs M ≥ 1".into()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Divergent(format!(
            "kernel F diverges for non-positive argument x = {x}"
        )));
    }
    if !(z.re > -1.0) || !z.im.is_finite() {
        return Err(Error::Divergent(format!("kernel F requires Re z > −1, got z = {z}")));
    }
    Ok(())
}

/// `F(x, z) = x^M ∫_0^∞ e^{−xλ}(1+λ)^{z+M−1} dλ`.
///
/// Real non-negative integer `z` uses the closed form
/// `x^{−z} e^{x} Γ(z+M, x)`; any other `z` uses quadrature.
pub fn kernel_f(x: f64, z: C64, m: usize) -> Result<C64> {
    check_kernel_args(x, z, m)?;
    match as_nonnegative_integer(z) {
        Some(k) => Ok(C64::new(kernel_f_closed(x, k, m)?, 0.0)),
        None => Ok(kernel_f_quadrature(x, z, m, &QuadratureSettings::default())?.value),
    }
}

/// Closed form `x^{−z} e^{x} Γ(z+M, x)` for integer `z ≥ 0`.
pub fn kernel_f_closed(x: f64, z: usize, m: usize) -> Result<f64> {
    check_kernel_args(x, C64::new(z as f64, 0.0), m)?;
    Ok(upper_incomplete_gamma_scaled(z + m, x)? * x.powi(-(z as i32)))
}

/// The defining integral of [`kernel_f`], with its error estimate.
pub fn kernel_f_quadrature(x: f64, z: C64, m: usize, settings: &QuadratureSettings) -> Result<Quadrature> {
    check_kernel_args(x, z, m)?;
    kernel_f_partial_quadrature(x, z, m, 0, 0, settings)
}

/// `∂_x^{dx} ∂_z^{dz} F(x, z)` for kernel order `M`.
///
/// Integer `z ≥ 0` with `dz = 0` differentiates the closed-form Laurent
/// polynomial exactly; otherwise the derivatives are taken under the
/// integral sign.
pub fn kernel_f_partial(x: f64, z: C64, m: usize, dx: usize, dz: usize, settings: &QuadratureSettings) -> Result<C64> {
    check_kernel_args(x, z, m)?;
    if dz == 0 {
        if let Some(k) = as_nonnegative_integer(z) {
            // F = Σ_{j<a} (a−1)!/j! x^{j−z}, a = z+M.
            let a = k + m;
            let fa = factorial(a - 1);
            let mut sum = 0.0;
            let mut inv_fact = 1.0;
            for j in 0..a {
                if j > 0 {
                    inv_fact /= j as f64;
                }
                let e = j as i64 - k as i64;
                sum += fa * inv_fact * signed_falling(e, dx) * x.powi((e - dx as i64) as i32);
            }
            return Ok(C64::new(sum, 0.0));
        }
    }
    Ok(kernel_f_partial_quadrature(x, z, m, dx, dz, settings)?.value)
}

/// `e (e−1) … (e−d+1)` for a signed integer `e`.
fn signed_falling(e: i64, d: usize) -> f64 {
    (0..d as i64).fold(1.0, |acc, i| acc * (e - i) as f64)
}

fn kernel_f_partial_quadrature(
    x: f64,
    z: C64,
    m: usize,
    dx: usize,
    dz: usize,
    settings: &QuadratureSettings,
) -> Result<Quadrature> {
    // ∂_x^{dx}[x^M e^{−xλ}] = e^{−xλ} Σ_l C(dx,l) (M)_l x^{M−l} (−λ)^{dx−l}.
    let coeffs: Vec<(usize, f64)> = (0..=dx.min(m))
        .map(|l| {
            (
                dx - l,
                binomial(dx, l) * falling_factorial(m, l) * x.powi((m - l) as i32),
            )
        })
        .collect();
    let w = z + (m as f64 - 1.0);
    let integrand = move |lam: f64| -> C64 {
        let l1p = lam.ln_1p();
        let base = (w * l1p - x * lam).exp();
        let poly: f64 = coeffs
            .iter()
            .map(|&(p, c)| c * if p % 2 == 0 { 1.0 } else { -1.0 } * lam.powi(p as i32))
            .sum();
        base * (poly * l1p.powi(dz as i32))
    };
    integrate_semi_infinite(integrand, 0.0, x, settings)
}

/// `∂F/∂z` at `z = 0`: `x^M ∫_0^∞ e^{−xλ}(1+λ)^{M−1} ln(1+λ) dλ`.
pub fn kernel_f_dz(x: f64, m: usize) -> Result<f64> {
    check_kernel_args(x, C64::new(0.0, 0.0), m)?;
    Ok(
        kernel_f_partial_quadrature(x, C64::new(0.0, 0.0), m, 0, 1, &QuadratureSettings::default())?
            .value
            .re,
    )
}

/// `∂F/∂z` at `z = 0` through `e^{x} x^M (−1)^M [Ei(−x)/x]^{(M−1)}`.
///
/// The `(M−1)`-fold derivative is expanded by Leibniz with the exact integer
/// coefficients `d^k Ei(−x) = e^{−x}(−1)^{k−1} Σ_j C(k−1,j) j! x^{−j−1}`.
/// The expansion alternates in sign, so it is a verification path only.
pub fn kernel_f_dz_ei(x: f64, m: usize) -> Result<f64> {
    check_kernel_args(x, C64::new(0.0, 0.0), m)?;
    let n = m - 1;
    let mut h = 0.0;
    for k in 0..=n {
        // e^{x} d^k Ei(−x)
        let q = if k == 0 {
            -e1_scaled(x)?
        } else {
            let s: f64 = (0..k)
                .map(|j| binomial(k - 1, j) * factorial(j) * x.powi(-(j as i32) - 1))
                .sum();
            if (k - 1) % 2 == 0 {
                s
            } else {
                -s
            }
        };
        // d^{n−k} (1/x)
        let r = n - k;
        let inv = if r.is_multiple_of(2) { 1.0 } else { -1.0 } * factorial(r) * x.powi(-(r as i32) - 1);
        h += binomial(n, k) * q * inv;
    }
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * x.powi(m as i32) * h)
}

/// `Ψ(a, b, x) = (1/Γ(a)) ∫_0^∞ e^{−tx} t^{a−1} (1+t)^{b−a−1} dt`, integer `a ≥ 1`.
pub fn tricomi_psi(a: usize, b: C64, x: f64) -> Result<C64> {
    Ok(tricomi_psi_with(a, b, x, &QuadratureSettings::default())?.value)
}

/// [`tricomi_psi`] with explicit settings and the quadrature error estimate.
pub fn tricomi_psi_with(a: usize, b: C64, x: f64, settings: &QuadratureSettings) -> Result<Quadrature> {
    check_psi_args(a, x)?;
    psi_quadrature(a, b - (a as f64 + 1.0), x, 0, 0, settings)
}

fn check_psi_args(a: usize, x: f64) -> Result<()> {
    if a == 0 {
        return Err(Error::InvalidArgument("Tricomi Ψ needs integer a ≥ 1".into()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Divergent(format!("Tricomi Ψ integral diverges for x = {x}")));
    }
    Ok(())
}

/// `∂_x^{dx} ∂_z^{dz} Ψ(a, a+z+1, x)`: the columns of the transmit-correlated
/// MGF determinant and their node derivatives.
pub fn psi_partial(a: usize, z: C64, x: f64, dx: usize, dz: usize, settings: &QuadratureSettings) -> Result<C64> {
    check_psi_args(a, x)?;
    if dz == 0 {
        if let Some(k) = as_nonnegative_integer(z) {
            // (1+t)^k = Σ_j C(k,j) t^j, then ∫ t^{a−1+j+dx} e^{−tx} = (a−1+j+dx)!/x^{a+j+dx}.
            let sign = if dx.is_multiple_of(2) { 1.0 } else { -1.0 };
            let ga = factorial(a - 1);
            let sum: f64 = (0..=k)
                .map(|j| binomial(k, j) * factorial(a - 1 + j + dx) / ga * x.powi(-((a + j + dx) as i32)))
                .sum();
            return Ok(C64::new(sign * sum, 0.0));
        }
    }
    Ok(psi_quadrature(a, z, x, dx, dz, settings)?.value)
}

fn psi_quadrature(a: usize, z: C64, x: f64, dx: usize, dz: usize, settings: &QuadratureSettings) -> Result<Quadrature> {
    let scale = if dx.is_multiple_of(2) { 1.0 } else { -1.0 } / factorial(a - 1);
    let p = (a - 1 + dx) as i32;
    let integrand = move |t: f64| -> C64 {
        let l1p = t.ln_1p();
        (z * l1p - x * t).exp() * (scale * t.powi(p) * l1p.powi(dz as i32))
    };
    // Keep the head past the peak of t^{a−1+dx} e^{−tx}.
    let split = (30.0 / x).max(1.0) + 2.0 * (p as f64 + z.re.max(0.0)) / x;
    integrate_semi_infinite_split(integrand, 0.0, split, x, settings)
}

/// `∫_0^∞ λ^n (1+λ)^z [ln(1+λ)]^{dz} e^{−λ} φ^{(k)}(γλ) dλ` with
/// `φ(s) = I₀(2√s)`: the row functions of the Rician determinants.
pub fn bessel_moment(n: usize, k: usize, gamma: f64, z: C64, dz: usize, settings: &QuadratureSettings) -> Result<C64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Rician node must be finite and non-negative, got {gamma}"
        )));
    }
    let integrand = move |lam: f64| -> C64 {
        if lam <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let l1p = lam.ln_1p();
        let log_w = -lam + n as f64 * lam.ln();
        let b = super::bessel_kernel_scaled(k, gamma * lam, log_w);
        (z * l1p).exp() * (b * l1p.powi(dz as i32))
    };
    // e^{−λ} φ(γλ) peaks near λ ≈ γ with width ~ 2√γ.
    let split = gamma + 10.0 * gamma.sqrt() + 30.0 + 2.0 * (n as f64 + z.re.max(0.0));
    Ok(integrate_semi_infinite_split(integrand, 0.0, split, 1.0, settings)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{exp_integral_e1, integrate};
    use proptest::prelude::*;

    fn settings() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn incomplete_gamma_examples() {
        for &x in &[0.1, 1.0, 7.5] {
            let v = upper_incomplete_gamma(1, x).unwrap();
            assert!((v - (-x).exp()).abs() < 1e-15 * v);
        }
        assert!((upper_incomplete_gamma(3, 1e-300).unwrap() - 2.0).abs() < 1e-15);
        let q = integrate(|t| C64::new(t.powi(3) * (-t).exp(), 0.0), 2.5, 80.0, &settings())
            .unwrap()
            .value
            .re;
        assert!((upper_incomplete_gamma(4, 2.5).unwrap() - q).abs() < 1e-11);
        assert!(upper_incomplete_gamma(0, 1.0).is_err());
        assert!(upper_incomplete_gamma(2, -1.0).is_err());
    }

    #[test]
    fn kernel_trivial_values() {
        for &x in &[0.01, 0.5, 3.0, 250.0] {
            let v = kernel_f(x, C64::new(0.0, 0.0), 1).unwrap();
            assert!((v.re - 1.0).abs() < 1e-14);
        }
        let v = kernel_f(1.0, C64::new(0.0, 0.0), 3).unwrap();
        assert!((v.re - 5.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_complex_z_and_integer_cross_check() {
        let z = C64::new(0.7, 1.3);
        let q = kernel_f(0.9, z, 2).unwrap();
        let fine = kernel_f_quadrature(0.9, z, 2, &settings().scaled(1e-2)).unwrap().value;
        assert!(rel(q, fine) < 1e-10);
        let closed = kernel_f_closed(0.9, 1, 2).unwrap();
        let quad = kernel_f_quadrature(0.9, C64::new(1.0, 0.0), 2, &settings())
            .unwrap()
            .value;
        assert!((quad.re - closed).abs() < 1e-10 * closed && quad.im == 0.0);
    }

    #[test]
    fn kernel_at_zero_is_scaled_incomplete_gamma() {
        for m in 1..=6 {
            for &x in &[0.1f64, 1.0, 10.0] {
                let expected = x.exp() * upper_incomplete_gamma(m, x).unwrap();
                let closed = kernel_f(x, C64::new(0.0, 0.0), m).unwrap().re;
                let quad = kernel_f_quadrature(x, C64::new(0.0, 0.0), m, &settings())
                    .unwrap()
                    .value
                    .re;
                assert!((closed - expected).abs() < 1e-12 * expected, "M={m} x={x}");
                assert!((quad - expected).abs() < 1e-10 * expected, "M={m} x={x}");
            }
        }
    }

    #[test]
    fn kernel_rejects_divergent_parameters() {
        assert!(matches!(kernel_f(0.0, C64::new(0.0, 0.0), 2), Err(Error::Divergent(_))));
        assert!(matches!(
            kernel_f(1.0, C64::new(-1.5, 0.0), 2),
            Err(Error::Divergent(_))
        ));
        assert!(kernel_f(1.0, C64::new(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn kernel_dz_values() {
        // M = 1, x = 1: ∫ e^{−λ} ln(1+λ) dλ = e E₁(1).
        let oracle = integrate_semi_infinite(|l| C64::new((-l).exp() * l.ln_1p(), 0.0), 0.0, 1.0, &settings())
            .unwrap()
            .value
            .re;
        let v = kernel_f_dz(1.0, 1).unwrap();
        assert!((v - oracle).abs() < 1e-11);
        assert!((v - 1.0f64.exp() * exp_integral_e1(1.0).unwrap()).abs() < 1e-12);
        assert!((v - 0.596_347_362_323_194).abs() < 1e-12);
        let (a, b) = (kernel_f_dz(10.0, 1).unwrap(), kernel_f_dz(100.0, 1).unwrap());
        assert!(v > a && a > b && b > 0.0);
    }

    #[test]
    fn kernel_dz_two_formulas_agree() {
        for m in 1..=5 {
            // Large arguments concentrate the integrand in λ ≲ 1/x.
            for &x in &[0.5, 2.0, 7.0, 1e4, 1e6, 1e8] {
                let q = kernel_f_dz(x, m).unwrap();
                let e = kernel_f_dz_ei(x, m).unwrap();
                assert!((q - e).abs() < 1e-9 * q.abs(), "M={m} x={x}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn kernel_dz_matches_finite_difference() {
        let h = 1e-5;
        for m in 1..=4 {
            for &x in &[0.3, 2.0] {
                let fp = kernel_f_quadrature(x, C64::new(h, 0.0), m, &settings().scaled(1e-3))
                    .unwrap()
                    .value
                    .re;
                let fm = kernel_f_quadrature(x, C64::new(-h, 0.0), m, &settings().scaled(1e-3))
                    .unwrap()
                    .value
                    .re;
                let fd = (fp - fm) / (2.0 * h);
                let d = kernel_f_dz(x, m).unwrap();
                assert!((fd - d).abs() < 1e-7 * d.abs(), "M={m} x={x}");
            }
        }
    }

    #[test]
    fn kernel_integration_by_parts_recurrence() {
        // F(x,z,M) = x^{M−1} + (z+M−1) F(x,z,M−1).
        let z = C64::new(0.4, -0.8);
        for m in 2..=5 {
            for &x in &[0.4, 3.0] {
                let lhs = kernel_f(x, z, m).unwrap();
                let rhs = C64::new(x.powi(m as i32 - 1), 0.0) + (z + (m as f64 - 1.0)) * kernel_f(x, z, m - 1).unwrap();
                assert!(rel(lhs, rhs) < 1e-9, "M={m} x={x}");
            }
        }
    }

    #[test]
    fn kernel_partials_closed_vs_quadrature() {
        for (dx, m, k, x) in [(1, 2, 0, 0.7), (2, 3, 1, 1.5), (3, 2, 2, 0.4), (1, 4, 0, 6.0)] {
            let z = C64::new(k as f64, 0.0);
            let c = kernel_f_partial(x, z, m, dx, 0, &settings()).unwrap();
            let q = kernel_f_partial_quadrature(x, z, m, dx, 0, &settings()).unwrap().value;
            assert!(rel(q, c) < 1e-9, "dx={dx} M={m} z={k} x={x}: {q} vs {c}");
        }
    }

    #[test]
    fn tolerance_monotone() {
        let z = C64::new(0.2, 2.5);
        let coarse = kernel_f_quadrature(0.6, z, 3, &settings()).unwrap();
        let fine = kernel_f_quadrature(0.6, z, 3, &settings().halved()).unwrap();
        assert!((coarse.value - fine.value).norm() <= coarse.error.max(1e-15));
        let coarse = tricomi_psi_with(3, C64::new(1.0, 4.0), 0.3, &settings()).unwrap();
        let fine = tricomi_psi_with(3, C64::new(1.0, 4.0), 0.3, &settings().halved()).unwrap();
        assert!((coarse.value - fine.value).norm() <= coarse.error.max(1e-15));
    }

    #[test]
    fn psi_examples() {
        for a in 1..=4 {
            for &x in &[0.2f64, 1.0, 9.0] {
                let v = tricomi_psi(a, C64::new(a as f64 + 1.0, 0.0), x).unwrap();
                let e = x.powi(-(a as i32));
                assert!((v.re - e).abs() < 1e-10 * e, "a={a} x={x}");
            }
        }
        for &x in &[0.5f64, 1.0, 4.0] {
            let v = tricomi_psi(1, C64::new(1.0, 0.0), x).unwrap();
            let e = e1_scaled(x).unwrap();
            assert!((v.re - e).abs() < 1e-10 * e);
        }
        let b = C64::new(1.5, 0.5);
        let v1 = tricomi_psi_with(2, b, 1.0, &settings()).unwrap().value;
        let v2 = tricomi_psi_with(2, b, 1.0, &settings().halved()).unwrap().value;
        assert!((v1 - v2).norm() < 1e-9);
        assert!(tricomi_psi(0, b, 1.0).is_err());
        assert!(tricomi_psi(1, b, 0.0).is_err());
    }

    #[test]
    fn psi_partials_closed_vs_quadrature() {
        for (a, k, dx, x) in [(1, 0, 1, 0.5), (2, 1, 2, 1.3), (3, 2, 1, 4.0), (1, 3, 3, 0.8)] {
            let z = C64::new(k as f64, 0.0);
            let c = psi_partial(a, z, x, dx, 0, &settings()).unwrap();
            let q = psi_quadrature(a, z, x, dx, 0, &settings()).unwrap().value;
            assert!(rel(q, c) < 1e-9, "a={a} z={k} dx={dx} x={x}");
        }
    }

    #[test]
    fn bessel_moment_at_zero_node() {
        // γ = 0: φ^{(k)}(0) = 1/k!, so the moment is n!/k! at z = 0.
        for (n, k) in [(0, 0), (2, 1), (3, 3)] {
            let v = bessel_moment(n, k, 0.0, C64::new(0.0, 0.0), 0, &settings()).unwrap();
            let e = factorial(n) / factorial(k);
            assert!((v.re - e).abs() < 1e-10 * e);
        }
        // ∫ e^{−λ} I₀(2√(γλ)) dλ = e^{γ}.
        let g: f64 = 12.0;
        let v = bessel_moment(0, 0, g, C64::new(0.0, 0.0), 0, &settings()).unwrap();
        assert!((v.re - g.exp()).abs() < 1e-10 * g.exp());
    }

    proptest! {
        #[test]
        fn closed_and_quadrature_kernel_agree(x in 0.05f64..30.0, k in 0usize..4, m in 1usize..6) {
            let c = kernel_f_closed(x, k, m).unwrap();
            let q = kernel_f_quadrature(x, C64::new(k as f64, 0.0), m, &settings()).unwrap().value.re;
            prop_assert!((c - q).abs() <= 1e-9 * c);
        }

        #[test]
        fn psi_positive_and_decreasing_for_real_b(a in 1usize..5, b in -3.0f64..5.0, x in 0.1f64..10.0) {
            let v1 = tricomi_psi(a, C64::new(b, 0.0), x).unwrap().re;
            let v2 = tricomi_psi(a, C64::new(b, 0.0), x * 1.1).unwrap().re;
            prop_assert!(v1 > 0.0 && v2 < v1);
        }
    }
}
