//! Adaptive Gauss–Legendre quadrature for complex-valued integrands.
//!
//! Each segment carries a 20-point rule over the whole segment and over its
//! two halves; the difference is the (conservative) local error estimate.
//! The segment with the largest estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol·|I|)`. Semi-infinite integrals are
//! split into a finite head and a tail mapped onto `[0, 1)`.

use std::sync::OnceLock;

use crate::{Error, Result, C64};

/// Order of the per-segment Gauss–Legendre rule.
const RULE_ORDER: usize = 20;

/// Substitution used on the infinite tail `[L, ∞)` of a semi-infinite integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TailTransform {
    /// `λ = L + s/((1−s)·rate)`; the Jacobian `1/(1−s)²` is smooth against
    /// exponential decay, so the mapped integrand vanishes to all orders at `s = 1`.
    #[default]
    Rational,
    /// `λ = L − ln(1−s)/rate`; matches a pure `e^{−rate·λ}` decay exactly.
    Exponential,
}

/// Tolerances and limits for the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target.
    pub rel_tol: f64,
    /// Maximum number of bisections per finite piece.
    pub max_subdivisions: usize,
    /// Substitution applied to infinite tails.
    pub tail: TailTransform,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 1000,
            tail: TailTransform::Rational,
        }
    }
}

impl QuadratureSettings {
    /// Checks the invariants (positive tolerances, at least one subdivision).
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidArgument(
                "quadrature needs at least one subdivision".into(),
            ));
        }
        Ok(())
    }

    /// The same settings with both tolerances halved.
    pub fn halved(&self) -> Self {
        Self {
            abs_tol: self.abs_tol / 2.0,
            rel_tol: self.rel_tol / 2.0,
            ..*self
        }
    }

    /// The same settings with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    /// Integral estimate.
    pub value: C64,
    /// Estimated absolute error (an upper-bound style estimate).
    pub error: f64,
    /// Number of bisections performed.
    pub subdivisions: usize,
}

impl Quadrature {
    fn combine(self, other: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + other.value,
            error: self.error + other.error,
            subdivisions: self.subdivisions + other.subdivisions,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, computed by Newton
/// iteration on the three-term Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(RULE_ORDER))
}

/// Fixed-order rule over `[a, b]`: `(∫f, ∫|f|)`.
fn apply_rule(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> Result<(C64, f64)> {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = C64::new(0.0, 0.0);
    let mut abs = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = f(mid + half * xi);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::QuadratureFailure {
                estimate: f64::NAN,
                error: f64::INFINITY,
                subdivisions: 0,
            });
        }
        sum += v * *wi;
        abs += v.norm() * wi;
    }
    Ok((sum * half, abs * half.abs()))
}

struct Segment {
    a: f64,
    b: f64,
    halves: (C64, C64),
    abs: f64,
    error: f64,
}

impl Segment {
    fn new(f: &impl Fn(f64) -> C64, a: f64, b: f64, whole: C64) -> Result<Self> {
        let m = 0.5 * (a + b);
        let (l, la) = apply_rule(f, a, m)?;
        let (r, ra) = apply_rule(f, m, b)?;
        Ok(Self {
            a,
            b,
            halves: (l, r),
            abs: la + ra,
            error: (whole - l - r).norm(),
        })
    }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> C64, a: f64, b: f64, settings: &QuadratureSettings) -> Result<Quadrature> {
    settings.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite integration limits required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: C64::new(0.0, 0.0),
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (whole, _) = apply_rule(&f, a, b)?;
    let mut segments = vec![Segment::new(&f, a, b, whole)?];
    let mut subdivisions = 0;
    loop {
        let value: C64 = segments.iter().map(|s| s.halves.0 + s.halves.1).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let abs: f64 = segments.iter().map(|s| s.abs).sum();
        // Round-off floor: no rule can resolve below a few ulps of ∫|f|.
        let target = settings
            .abs_tol
            .max(settings.rel_tol * value.norm())
            .max(64.0 * f64::EPSILON * abs);
        if error <= target {
            return Ok(Quadrature {
                value,
                error,
                subdivisions,
            });
        }
        if subdivisions >= settings.max_subdivisions {
            return Err(Error::QuadratureFailure {
                estimate: value.re,
                error,
                subdivisions,
            });
        }
        let (k, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite error"))
            .expect("nonempty segment list");
        let s = segments.swap_remove(k);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Interval exhausted in floating point; accept what we have.
            return Ok(Quadrature {
                value,
                error,
                subdivisions,
            });
        }
        segments.push(Segment::new(&f, s.a, m, s.halves.0)?);
        segments.push(Segment::new(&f, m, s.b, s.halves.1)?);
        subdivisions += 1;
    }
}

/// Adaptive integral of `f` over `[a, ∞)` for an integrand decaying like
/// `e^{−rate·λ}`; the head/tail split sits at `a + 30/rate`, so the head
/// always resolves the decay scale however steep it is.
pub fn integrate_semi_infinite(
    f: impl Fn(f64) -> C64,
    a: f64,
    rate: f64,
    settings: &QuadratureSettings,
) -> Result<Quadrature> {
    let split = a + 30.0 / rate;
    integrate_semi_infinite_split(f, a, split, rate, settings)
}

/// As [`integrate_semi_infinite`] with an explicit head/tail split point.
pub fn integrate_semi_infinite_split(
    f: impl Fn(f64) -> C64,
    a: f64,
    split: f64,
    rate: f64,
    settings: &QuadratureSettings,
) -> Result<Quadrature> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Divergent(format!(
            "semi-infinite integral needs a positive decay rate, got {rate}"
        )));
    }
    if !(split >= a) {
        return Err(Error::InvalidArgument(format!(
            "tail split {split} lies before the lower limit {a}"
        )));
    }
    let head = integrate(&f, a, split, settings)?;
    let tail_fn = |s: f64| -> C64 {
        let (phi, jac) = match settings.tail {
            TailTransform::Rational => (s / (1.0 - s), 1.0 / ((1.0 - s) * (1.0 - s))),
            TailTransform::Exponential => (-(-s).ln_1p(), 1.0 / (1.0 - s)),
        };
        let v = f(split + phi / rate);
        if v == C64::new(0.0, 0.0) {
            v
        } else {
            v * (jac / rate)
        }
    };
    let tail = integrate(tail_fn, 0.0, 1.0, settings)?;
    Ok(head.combine(tail))
}
