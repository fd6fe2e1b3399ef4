//! Modified Bessel function `I₀` and the scaled Rician kernel series.

use crate::numkit::ln_factorial;

/// Switch from the power series to the asymptotic expansion.
const SERIES_LIMIT: f64 = 15.0;

/// `I₀(x)` for `x ≥ 0`: power series `Σ (x/2)^{2k}/(k!)²` up to 15, the
/// scaled asymptotic expansion beyond.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        bessel_i0_series(x)
    } else {
        bessel_i0_asymptotic_scaled(x) * x.exp()
    }
}

/// `e^{−x} I₀(x)` for `x ≥ 0`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        bessel_i0_series(x) * (-x).exp()
    } else {
        bessel_i0_asymptotic_scaled(x)
    }
}

/// Power series branch (valid everywhere, used for `x ≤ 15`).
pub fn bessel_i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..1000 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `e^{−x} I₀(x)` by `1/√(2πx) Σ ((2k−1)!!)²/(k! 8^k x^k)`, truncated at the
/// smallest term.
pub fn bessel_i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * ((2 * k - 1) * (2 * k - 1)) as f64 / (8.0 * k as f64 * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `e^{log_factor} Σ_{k≥0} s^k/(k!(k+n)!)`, the `n`-th derivative of
/// `φ(s) = I₀(2√s)` times an exponential weight, evaluated without
/// intermediate overflow.
pub fn bessel_kernel_scaled(n: usize, s: f64, log_factor: f64) -> f64 {
    if s <= 0.0 {
        return (log_factor - ln_factorial(n)).exp();
    }
    if s < 40_000.0 {
        // Direct forward recurrence; the sum stays far below overflow.
        let mut term = 1.0 / crate::numkit::factorial(n);
        let mut sum = term;
        for k in 0..100_000usize {
            term *= s / ((k + 1) * (k + 1 + n)) as f64;
            sum += term;
            if term < 1e-17 * sum && (k + 1) as f64 * (k as f64 + 1.0 + n as f64) > s {
                break;
            }
        }
        return (log_factor + sum.ln()).exp();
    }
    // Sum outward from the peak term in log space.
    let nf = n as f64;
    let k0 = ((-nf + (nf * nf + 4.0 * s).sqrt()) / 2.0).floor().max(0.0) as usize;
    let log_peak = k0 as f64 * s.ln() - ln_factorial(k0) - ln_factorial(k0 + n);
    let mut sum = 1.0;
    let mut rel = 1.0;
    let mut k = k0;
    loop {
        rel *= s / ((k + 1) * (k + 1 + n)) as f64;
        sum += rel;
        k += 1;
        if rel < 1e-17 * sum {
            break;
        }
    }
    rel = 1.0;
    k = k0;
    while k > 0 {
        rel *= (k * (k + n)) as f64 / s;
        sum += rel;
        k -= 1;
        if rel < 1e-17 * sum {
            break;
        }
    }
    (log_factor + log_peak + sum.ln()).exp()
}
