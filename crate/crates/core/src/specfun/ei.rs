//! Exponential integral on the negative axis.
//!
//! `Ei(−x) = −E₁(x)` for `x > 0`. The convergent series is used for
//! `x ≤ 6` and a Lentz-evaluated continued fraction beyond.

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Branch switch between the series and the continued fraction.
const SERIES_LIMIT: f64 = 6.0;

/// `Ei(x)` for `x < 0`.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    check_negative(x)?;
    Ok(-exp_integral_e1(-x)?)
}

/// `E₁(x) = ∫_x^∞ e^{−t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x <= SERIES_LIMIT {
        e1_series(x)
    } else {
        e1_continued_fraction_scaled(x) * (-x).exp()
    })
}

/// `e^{x} E₁(x)` for `x > 0`, free of overflow/underflow for large `x`.
pub fn e1_scaled(x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(if x <= SERIES_LIMIT {
        e1_series(x) * x.exp()
    } else {
        e1_continued_fraction_scaled(x)
    })
}

/// `Ei(x)`, `x < 0`, forced through the convergent series.
pub fn exp_integral_ei_series(x: f64) -> Result<f64> {
    check_negative(x)?;
    Ok(-e1_series(-x))
}

/// `Ei(x)`, `x < 0`, forced through the continued fraction (slow for `|x| < 1`).
pub fn exp_integral_ei_continued_fraction(x: f64) -> Result<f64> {
    check_negative(x)?;
    Ok(-e1_continued_fraction_scaled(-x) * x.exp())
}

fn check_negative(x: f64) -> Result<()> {
    if x < 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Ei is implemented for finite negative arguments only, got {x}"
        )))
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "E1 needs a finite positive argument, got {x}"
        )))
    }
}

/// Convergent series for `E₁`.
///
/// Below `x = 1/2` the Kummer form `−γ − ln x + e^{−x} Σ_{k≥1} H_k x^k/k!`
/// is used directly. Above it the result is a small difference of `O(1)`
/// quantities, so `Ein(x) = Σ (−1)^{k+1} x^k/(k·k!)`, `γ` and `ln x` are
/// carried in double-double arithmetic before the final subtraction.
fn e1_series(x: f64) -> f64 {
    if x < 0.5 {
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut sum = 0.0;
        for k in 1..500 {
            term *= x / k as f64;
            harmonic += 1.0 / k as f64;
            let add = term * harmonic;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        return -EULER_GAMMA - x.ln() + (-x).exp() * sum;
    }
    let mut power = Dd::from(1.0);
    let mut ein = Dd::from(0.0);
    for k in 1..500 {
        power = power.mul_f(x).div_f(k as f64);
        let add = power.div_f(k as f64);
        ein = if k % 2 == 1 { ein.add(add) } else { ein.sub(add) };
        if add.0.abs() < 1e-34 * ein.0.abs() {
            break;
        }
    }
    ein.sub(EULER_GAMMA_DD).sub(ln_dd(x)).0
}

/// `γ` as an unevaluated double-double sum.
const EULER_GAMMA_DD: Dd = Dd(0.577_215_664_901_532_9, -4.942_915_152_430_645e-18);

/// `ln x` to double-double accuracy for moderate `x`: one Newton step
/// `ln x ≈ h + (x e^{−h} − 1)` with `e^{−h}` from its Taylor series in
/// double-double.
fn ln_dd(x: f64) -> Dd {
    let h = x.ln();
    let mut term = Dd::from(1.0);
    let mut exp = Dd::from(1.0);
    for n in 1..200 {
        term = term.mul_f(-h).div_f(n as f64);
        exp = exp.add(term);
        if term.0.abs() < 1e-34 * exp.0.abs() {
            break;
        }
    }
    let delta = exp.mul_f(x).sub(Dd::from(1.0));
    Dd::from(h).add(delta)
}

/// Minimal double-double number `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

impl Dd {
    fn from(v: f64) -> Self {
        Dd(v, 0.0)
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.0, o.0);
        let (t, f) = two_sum(self.1, o.1);
        let (s, e) = quick_two_sum(s, e + t);
        let (s, e) = quick_two_sum(s, e + f);
        Dd(s, e)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd(-o.0, -o.1))
    }

    fn mul_f(self, b: f64) -> Dd {
        let p = self.0 * b;
        let e = self.0.mul_add(b, -p) + self.1 * b;
        let (s, e) = quick_two_sum(p, e);
        Dd(s, e)
    }

    fn div_f(self, b: f64) -> Dd {
        let q1 = self.0 / b;
        let r = self.sub(Dd::from(b).mul_f(q1));
        let q2 = r.0 / b;
        let (s, e) = quick_two_sum(q1, q2);
        Dd(s, e)
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `e^{x} E₁(x)` by the modified Lentz algorithm on
/// `1/(x+1− 1²/(x+3− 2²/(x+5− …)))`.
fn e1_continued_fraction_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
