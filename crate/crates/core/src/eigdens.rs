//! Closed-form joint densities of the nonzero eigenvalues of `G†G`.
//!
//! Three ensembles have closed forms: i.i.d. (Laguerre weight), transmit
//! semicorrelated (both antenna orderings) and nonzero mean (Bessel kernel).
//! Each density is a product of a prefactor, `Δ(λ)` and a determinant ratio;
//! here every such ratio is evaluated as the two-sided
//! [`BorderedRatio`] `det/(Δ(x) Δ(λ))`, multiplied by `Δ(λ)²`. That
//! makes the density manifestly symmetric in the `λ` arguments and finite
//! (and accurate) at coincident arguments, and it routes degenerate `t` or
//! `γ` spectra through the confluent evaluator.
//!
//! The doubly correlated ensemble has no closed-form density in this
//! framework; use [`mgfcap`](crate::mgfcap) for its statistics.

use crate::channels::{inv_eigs, ChannelSpec};
use crate::numkit::{
    cluster_values, clusters_as, factorial, falling_factorial, hermitian_eigen, ln_factorial, product_kernel_partial,
    vandermonde, BorderedRatio, Mat, NodeFn, Spectrum, DEFAULT_MERGE_TOL,
};
use crate::specfun::{bessel_kernel_scaled, integrate, integrate_semi_infinite, QuadratureSettings};
use crate::{ComplexMatrix, Error, Result, C64};

/// Relative threshold below which an eigenvalue of `G0†G0` counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Which closed form a [`JointDensity`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityMethod {
    /// Laguerre-weight density of the i.i.d. ensemble.
    Iid,
    /// Exponential-kernel determinant of the transmit-correlated ensemble.
    SemiCorrelated,
    /// Bessel-kernel determinant of the nonzero-mean ensemble.
    NonzeroMean,
}

impl DensityMethod {
    /// Short tag used in reports and CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            DensityMethod::Iid => "iid",
            DensityMethod::SemiCorrelated => "semicorr",
            DensityMethod::NonzeroMean => "rician",
        }
    }
}

#[derive(Clone, Debug)]
enum Model {
    Iid {
        /// `M − N`, the exponent of the `λ` weight.
        excess: usize,
    },
    Semi {
        t: Spectrum,
        nt: usize,
        nr: usize,
    },
    Rician {
        /// Nonzero eigenvalues of `G0†G0` (absent when `G0 = 0`).
        gamma: Option<Spectrum>,
        /// `M − N`, the order of the Bessel kernel.
        excess: usize,
    },
}

/// A closed-form joint density `P(λ_1, …, λ_N)` on the positive orthant.
///
/// Evaluators are pure; a `JointDensity` can be shared across threads.
#[derive(Clone, Debug)]
pub struct JointDensity {
    spec: ChannelSpec,
    n: usize,
    model: Model,
    log_prefactor: f64,
    sign: f64,
    decay_rate: f64,
}

fn sign_of(exponent: usize) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `x ↦ x^power` with derivatives.
fn monomial<'a>(power: usize) -> NodeFn<'a, f64> {
    Box::new(move |x: &f64, k: usize| {
        Some(if k > power {
            0.0
        } else {
            falling_factorial(power, k) * x.powi((power - k) as i32)
        })
    })
}

/// `λ` arguments clustered for the confluent evaluator (zeros allowed).
fn lambda_clusters(lambda: &[f64]) -> Vec<crate::numkit::Cluster<f64>> {
    cluster_values(lambda, DEFAULT_MERGE_TOL)
}

/// Density of the i.i.d. ensemble, `C Δ(λ)² ∏ λ_i^{M−N} e^{−λ_i}` with
/// `C⁻¹ = ∏_{j=1}^N j! (M−N+j−1)!`.
pub fn density_iid(nt: usize, nr: usize) -> Result<JointDensity> {
    let spec = ChannelSpec::iid(nt, nr)?;
    let (m, n) = (spec.big_m(), spec.small_n());
    let log_c = -(1..=n)
        .map(|j| ln_factorial(j) + ln_factorial(m - n + j - 1))
        .sum::<f64>();
    Ok(JointDensity {
        spec,
        n,
        model: Model::Iid { excess: m - n },
        log_prefactor: log_c,
        sign: 1.0,
        decay_rate: 1.0,
    })
}

/// Sign of the transmit-correlated density in the layout used here.
///
/// For `nt ≤ nr` the sign is `(−1)^{nt(nt−1)/2}`. For `nt > nr`, with the
/// monomial columns `1, t, …, t^{p−1}` (`p = nt − nr`) placed first, the
/// tempting analogue `(−1)^{nr(nr−1)/2}` yields a negative density whenever
/// `nr·p` is odd (e.g. `nt = 2, nr = 1`), which the nonnegativity and
/// normalisation checks detect. The sign consistent with both checks for
/// that column order is `(−1)^{nt(nt−1)/2 + p(p−1)/2}`; the evaluator places the
/// monomial columns after the `λ` columns, which contributes a further
/// `(−1)^{p·nr}`.
fn semi_sign(nt: usize, nr: usize) -> f64 {
    let p = nt.saturating_sub(nr);
    sign_of(nt * (nt - 1) / 2 + p * p.saturating_sub(1) / 2 + p * nr)
}

/// Density of the transmit-correlated ensemble `G = W T^{1/2}`.
///
/// `t` is the spectrum of `T⁻¹`. For `nt ≤ nr`
/// `P = (1/nt!) ∏_j t_j^{nr} λ_j^{nr−nt}/(nr−nt+j−1)! · σ Δ(λ) det[e^{−t_i λ_j}]/Δ(t)`;
/// for `nt > nr` the determinant gains the monomial columns
/// `1, t_i, …, t_i^{nt−nr−1}` and the prefactor becomes `∏_{j≤nr} 1/j! ∏ t_i^{nr}`.
pub fn density_semicorrelated(t: &ComplexMatrix, nt: usize, nr: usize) -> Result<JointDensity> {
    if t.rows() != nt {
        return Err(Error::DimensionMismatch {
            what: "transmit correlation size vs nt",
            expected: nt,
            found: t.rows(),
        });
    }
    let spec = ChannelSpec::semi_correlated(t.clone(), nr)?;
    let (tinv, _) = inv_eigs(&spec)?;
    let n = spec.small_n();
    let ln_t: f64 = tinv.values().iter().map(|v| v.ln()).sum();
    let log_norm = if nt <= nr {
        -ln_factorial(nt) - (1..=nt).map(|j| ln_factorial(nr - nt + j - 1)).sum::<f64>()
    } else {
        -(1..=nr).map(ln_factorial).sum::<f64>()
    };
    let decay_rate = tinv.values().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(JointDensity {
        spec,
        n,
        log_prefactor: nr as f64 * ln_t + log_norm,
        sign: semi_sign(nt, nr),
        decay_rate,
        model: Model::Semi { t: tinv, nt, nr },
    })
}

/// Nonzero eigenvalues of `G0†G0` above `RANK_TOL · max`.
pub fn mean_eigenvalues(g0: &ComplexMatrix) -> Result<Option<Spectrum>> {
    let gram = g0.adjoint().matmul(g0)?;
    let (values, _) = hermitian_eigen(&gram)?;
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(None);
    }
    let kept: Vec<f64> = values.into_iter().filter(|&v| v > RANK_TOL * max).collect();
    Ok(Some(Spectrum::new(kept)?))
}

/// `φ^{(p)}(s) = Σ_k s^k/(k!(k+p)!) = I_p(2√s)/s^{p/2}` and its derivatives.
pub(crate) fn bessel_order_kernel(p: usize) -> impl Fn(&f64, usize, &f64, usize) -> Option<f64> {
    move |x: &f64, a: usize, y: &f64, b: usize| {
        let s = x * y;
        product_kernel_partial(*x, a, *y, b, |k| Some(bessel_kernel_scaled(p + k, s, 0.0)))
    }
}

/// The border row `λ ↦ λ^e/(e!(e+p)!)` left by a mean eigenvalue sent to 0.
pub(crate) fn bessel_border(e: usize, p: usize) -> NodeFn<'static, f64> {
    let scale = 1.0 / (factorial(e) * factorial(e + p));
    Box::new(move |x: &f64, k: usize| {
        Some(if k > e {
            0.0
        } else {
            scale * falling_factorial(e, k) * x.powi((e - k) as i32)
        })
    })
}

/// Density of the nonzero-mean ensemble `G = G0 + W`.
///
/// With `γ` the `N0` nonzero eigenvalues of `G0†G0`, `p = M − N` and
/// `φ^{(p)}(s) = I_p(2√s)/s^{p/2}`:
/// `P = (−1)^{(N−N0)N0}/N! · Δ(λ)² ∏ λ^p e^{−Σλ−Σγ} / ∏γ^{N−N0}
///  · det[φ^{(p)}(γ_i λ_j) ; λ_j^e/(e!(e+p)!)] / (Δ(γ) Δ(λ))`,
/// the `N − N0` border rows being the limit of the vanishing mean
/// eigenvalues.
///
/// For `M = N` this is the square form with the `I₀(2√(γλ))` kernel,
/// monomial border and `(−1)^{(N0+N)(M−1)}` sign (the two signs agree).
/// For `M > N`, padding `λ` with `M − N` zeros inside an `I₀` kernel is
/// tempting but wrong. That does not integrate to one: for
/// `nt = 1, nr = 2` it reduces to `(I₀(2√(γλ)) − 1) e^{−λ−γ}/γ`, of mass
/// `(1 − e^{−γ})/γ`, whereas the exact noncentral law is
/// `λ φ'(γλ) e^{−λ−γ}`. The rectangular ensemble needs the order-`p`
/// kernel used here, whose normalisation is fixed by the `γ → 0` limit
/// (it must reproduce the i.i.d. density).
pub fn density_nonzero_mean(g0: &ComplexMatrix, nt: usize, nr: usize) -> Result<JointDensity> {
    if g0.rows() != nr || g0.cols() != nt {
        return Err(Error::DimensionMismatch {
            what: "mean matrix shape vs nr × nt",
            expected: nr * nt,
            found: g0.rows() * g0.cols(),
        });
    }
    let spec = ChannelSpec::nonzero_mean(g0.clone())?;
    let (m, n) = (spec.big_m(), spec.small_n());
    let gamma = mean_eigenvalues(g0)?;
    let n0 = gamma.as_ref().map_or(0, Spectrum::len);
    let (sum_g, ln_g) = gamma
        .as_ref()
        .map_or((0.0, 0.0), |g| (g.sum(), g.values().iter().map(|v| v.ln()).sum()));
    let log_prefactor = -ln_factorial(n) - (n - n0) as f64 * ln_g - sum_g;
    Ok(JointDensity {
        spec,
        n,
        model: Model::Rician { gamma, excess: m - n },
        log_prefactor,
        sign: sign_of((n - n0) * n0),
        decay_rate: 1.0,
    })
}

/// The closed-form density of `spec`'s ensemble.
///
/// Fails for the doubly correlated ensemble, which has no closed-form
/// density; its statistics come from [`mgfcap`](crate::mgfcap).
pub fn density(spec: &ChannelSpec) -> Result<JointDensity> {
    use crate::channels::Variant;
    match spec.variant() {
        Variant::Iid => density_iid(spec.nt(), spec.nr()),
        Variant::SemiCorrelated { t } => density_semicorrelated(t, spec.nt(), spec.nr()),
        Variant::NonzeroMean { g0 } => density_nonzero_mean(g0, spec.nt(), spec.nr()),
        Variant::FullyCorrelated { .. } => Err(Error::InvalidArgument(
            "the doubly correlated ensemble has no closed-form eigenvalue density; use the MGF".into(),
        )),
    }
}

impl JointDensity {
    /// The channel specification the density belongs to.
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    /// Number `N` of arguments.
    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Which closed form is evaluated.
    pub fn method(&self) -> DensityMethod {
        match self.model {
            Model::Iid { .. } => DensityMethod::Iid,
            Model::Semi { .. } => DensityMethod::SemiCorrelated,
            Model::Rician { .. } => DensityMethod::NonzeroMean,
        }
    }

    /// Overall sign factor applied to the determinant ratio.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// Deliberately flips the analytic sign prefactor.
    ///
    /// Fault-injection hook for the validation harness: a correct
    /// nonnegativity check must reject the resulting density.
    #[doc(hidden)]
    pub fn with_flipped_sign(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    /// `P(λ)` for `N` nonnegative arguments (in any order).
    pub fn evaluate(&self, lambda: &[f64]) -> Result<f64> {
        if lambda.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "density arguments vs nonzero eigenvalue count",
                expected: self.n,
                found: lambda.len(),
            });
        }
        if let Some(&bad) = lambda.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "density arguments must be finite and nonnegative, got {bad}"
            )));
        }
        // Canonical (descending) order: the value is then exactly symmetric.
        let mut sorted = lambda.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite arguments"));
        let lambda = &sorted[..];
        let delta2 = vandermonde(lambda).powi(2);
        // The semicorrelated exponential lives inside its kernel.
        let decay = match self.model {
            Model::Semi { .. } => 0.0,
            _ => lambda.iter().sum::<f64>(),
        };
        let weight = (self.log_prefactor - decay).exp();
        let core = match &self.model {
            Model::Iid { excess } => lambda.iter().map(|l| l.powi(*excess as i32)).product::<f64>(),
            Model::Semi { t, nt, nr } => {
                let extra = if nt <= nr {
                    lambda.iter().map(|l| l.powi((nr - nt) as i32)).product::<f64>()
                } else {
                    1.0
                };
                extra * self.semi_ratio(t, *nt, *nr, lambda)?
            }
            Model::Rician { gamma, excess } => {
                lambda.iter().map(|l| l.powi(*excess as i32)).product::<f64>()
                    * self.rician_ratio(gamma.as_ref(), *excess, lambda)?
            }
        };
        Ok(self.sign * weight * delta2 * core)
    }

    /// `det[e^{−t_i λ_j} | t_i^f] / (Δ(t) Δ(λ))`.
    fn semi_ratio(&self, t: &Spectrum, nt: usize, nr: usize, lambda: &[f64]) -> Result<f64> {
        let p = nt.saturating_sub(nr);
        let exp_kernel = |x: &f64, a: usize, y: &f64, b: usize| {
            let e = (-x * y).exp();
            product_kernel_partial(*x, a, *y, b, |k| Some(sign_of(k) * e))
        };
        BorderedRatio {
            row_nodes: clusters_as(t),
            col_nodes: lambda_clusters(lambda),
            kernel: Some(Box::new(exp_kernel)),
            row_border: (0..p).map(monomial).collect(),
            col_border: Vec::new(),
            corner: Mat::zeros(0, p),
        }
        .ratio()
    }

    /// Bordered Bessel-kernel ratio `det[φ^{(p)}(γλ) ; border] / (Δ(γ) Δ(λ))`.
    fn rician_ratio(&self, gamma: Option<&Spectrum>, p: usize, lambda: &[f64]) -> Result<f64> {
        let n0 = gamma.map_or(0, Spectrum::len);
        BorderedRatio {
            row_nodes: gamma.map(clusters_as).unwrap_or_default(),
            col_nodes: lambda_clusters(lambda),
            kernel: Some(Box::new(bessel_order_kernel(p))),
            row_border: Vec::new(),
            col_border: (0..self.n - n0).map(|e| bessel_border(e, p)).collect(),
            corner: Mat::zeros(self.n - n0, 0),
        }
        .ratio()
    }

    /// `P(λ_max ≤ x)` (or the total mass for `x = ∞`) by nested adaptive
    /// quadrature; available for `N ≤ 2`.
    pub fn mass_below(&self, x: f64, settings: &QuadratureSettings) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "upper limit must be nonnegative, got {x}"
            )));
        }
        let one_d = |f: &dyn Fn(f64) -> C64, s: &QuadratureSettings| -> Result<f64> {
            let q = if x.is_infinite() {
                integrate_semi_infinite(f, 0.0, self.decay_rate, s)?
            } else {
                integrate(f, 0.0, x, s)?
            };
            Ok(q.value.re)
        };
        match self.n {
            1 => one_d(&|l| C64::new(self.evaluate(&[l]).unwrap_or(f64::NAN), 0.0), settings),
            2 => {
                // Symmetric integrand: twice the integral over λ₂ < λ₁.
                let inner_settings = settings.scaled(0.1);
                let outer = |l1: f64| -> C64 {
                    let inner = integrate(
                        |l2| C64::new(self.evaluate(&[l1, l2]).unwrap_or(f64::NAN), 0.0),
                        0.0,
                        l1,
                        &inner_settings,
                    );
                    inner.map_or(C64::new(f64::NAN, 0.0), |q| q.value * 2.0)
                };
                one_d(&outer, settings)
            }
            n => Err(Error::InvalidArgument(format!(
                "direct quadrature of the density supports N ≤ 2, got N = {n}"
            ))),
        }
    }

    /// Total probability mass (should be 1); `N ≤ 2`.
    pub fn total_mass(&self, settings: &QuadratureSettings) -> Result<f64> {
        self.mass_below(f64::INFINITY, settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_i0;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::diag(&v.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    fn settings() -> QuadratureSettings {
        QuadratureSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            ..QuadratureSettings::default()
        }
    }

    fn correlated(n: usize, rho: f64) -> ComplexMatrix {
        Mat::from_fn(n, n, |i, j| c(rho.powi((i as i32 - j as i32).abs())))
    }

    fn rank_one(nr: usize, nt: usize, scale: f64) -> ComplexMatrix {
        Mat::from_fn(nr, nt, |i, j| C64::from_polar(scale, 0.3 * (i + 2 * j) as f64))
    }

    #[test]
    fn product_kernel_partial_matches_finite_differences() {
        let phi = |x: f64, y: f64| (-(x * y)).exp();
        let (x, y, h) = (0.7, 1.3, 1e-3);
        let d = product_kernel_partial(x, 1, y, 1, |k| Some(sign_of(k) * (-(x * y)).exp())).unwrap();
        let fd = (phi(x + h, y + h) - phi(x + h, y - h) - phi(x - h, y + h) + phi(x - h, y - h)) / (4.0 * h * h);
        assert!((d - fd).abs() < 1e-6);
        let d2 = product_kernel_partial(x, 2, y, 0, |k| Some(sign_of(k) * (-(x * y)).exp())).unwrap();
        let fd2 = (phi(x + h, y) - 2.0 * phi(x, y) + phi(x - h, y)) / (h * h);
        assert!((d2 - fd2).abs() < 1e-6);
    }

    #[test]
    fn iid_trivial_forms() {
        let d = density_iid(1, 1).unwrap();
        for &l in &[0.0, 0.3, 2.0, 9.0] {
            assert!((d.evaluate(&[l]).unwrap() - (-l).exp()).abs() < 1e-15);
        }
        let d = density_iid(3, 1).unwrap();
        for &l in &[0.3f64, 2.0] {
            let expected = l * l * (-l).exp() / 2.0;
            assert!((d.evaluate(&[l]).unwrap() - expected).abs() < 1e-15);
        }
        assert_eq!(d.method(), DensityMethod::Iid);
        assert!(d.evaluate(&[1.0, 2.0]).is_err());
        assert!(d.evaluate(&[-1.0]).is_err());
    }

    #[test]
    fn iid_two_by_two_normalised() {
        let d = density_iid(2, 2).unwrap();
        assert!((d.total_mass(&settings()).unwrap() - 1.0).abs() < 1e-6);
        let d = density_iid(2, 3).unwrap();
        assert!((d.total_mass(&settings()).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn semicorrelated_gamma_density_for_single_transmitter() {
        let tm = diag(&[0.4]);
        for nr in 1..=4 {
            let d = density_semicorrelated(&tm, 1, nr).unwrap();
            let t: f64 = 2.5;
            for &l in &[0.2f64, 1.0, 3.7] {
                let expected = t.powi(nr as i32) * l.powi(nr as i32 - 1) * (-t * l).exp() / factorial(nr - 1);
                let v = d.evaluate(&[l]).unwrap();
                assert!((v - expected).abs() < 1e-13 * expected.max(1e-300), "nr={nr}");
            }
        }
    }

    #[test]
    fn semicorrelated_identity_matches_iid() {
        let pts = [[0.3, 1.7, 4.1], [0.05, 0.9, 2.2], [2.0, 3.5, 0.6]];
        for nt in 1..=3 {
            for nr in 1..=3 {
                let semi = density_semicorrelated(&ComplexMatrix::identity(nt), nt, nr).unwrap();
                let iid = density_iid(nt, nr).unwrap();
                let n = nt.min(nr);
                for p in &pts {
                    let a = semi.evaluate(&p[..n]).unwrap();
                    let b = iid.evaluate(&p[..n]).unwrap();
                    assert!(
                        (a - b).abs() <= 1e-8 * b.abs().max(1e-12),
                        "nt={nt} nr={nr}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn semicorrelated_normalised_both_orderings() {
        let d = density_semicorrelated(&diag(&[1.0, 2.0]), 2, 2).unwrap();
        assert!((d.total_mass(&settings()).unwrap() - 1.0).abs() < 1e-6);
        let d = density_semicorrelated(&correlated(3, 0.6), 3, 2).unwrap();
        assert!((d.total_mass(&settings()).unwrap() - 1.0).abs() < 1e-6);
        let d = density_semicorrelated(&diag(&[1.5, 0.5]), 2, 1).unwrap();
        assert!((d.total_mass(&settings()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn square_case_sign_for_more_transmitters_fails_nonnegativity() {
        // With nt = 2, nr = 1 the square-case analogue (−1)^{nr(nr−1)/2} = +1 differs
        // from the sign that keeps the density nonnegative.
        let d = density_semicorrelated(&diag(&[1.5, 0.5]), 2, 1).unwrap();
        assert!(d.evaluate(&[0.8]).unwrap() > 0.0);
        // That sign carried over to this column layout: (−1)^{nr(nr−1)/2} (−1)^{p·nr}.
        let naive_in_layout = sign_of(0) * sign_of(1);
        assert_ne!(naive_in_layout, d.sign());
        let flipped = d.with_flipped_sign();
        assert!(flipped.evaluate(&[0.8]).unwrap() < 0.0);
    }

    #[test]
    fn rician_scalar_is_rice_power_density() {
        let g0 = Mat::from_vec(1, 1, vec![C64::new(1.2, -0.5)]).unwrap();
        let d = density_nonzero_mean(&g0, 1, 1).unwrap();
        let gamma = g0[(0, 0)].norm_sqr();
        for &l in &[0.1f64, 1.0, 2.5, 6.0] {
            let expected = (-l - gamma).exp() * bessel_i0(2.0 * (gamma * l).sqrt());
            assert!((d.evaluate(&[l]).unwrap() - expected).abs() < 1e-14);
        }
        assert!((d.total_mass(&QuadratureSettings::default()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rician_zero_mean_reduces_to_iid() {
        for (nt, nr) in [(1, 1), (2, 2), (3, 2), (2, 3)] {
            let d = density_nonzero_mean(&ComplexMatrix::zeros(nr, nt), nt, nr).unwrap();
            let iid = density_iid(nt, nr).unwrap();
            let pts = [0.4, 1.9];
            let n = nt.min(nr);
            let (a, b) = (d.evaluate(&pts[..n]).unwrap(), iid.evaluate(&pts[..n]).unwrap());
            assert!((a - b).abs() < 1e-12 * b, "{nt}x{nr}: {a} vs {b}");
        }
    }

    #[test]
    fn rician_normalised() {
        let d = density_nonzero_mean(&rank_one(2, 2, 0.8), 2, 2).unwrap();
        assert_eq!(mean_eigenvalues(&rank_one(2, 2, 0.8)).unwrap().unwrap().len(), 1);
        let mass = d.total_mass(&settings()).unwrap();
        assert!((mass - 1.0).abs() < 1e-5, "{mass}");
        let g0 = Mat::from_fn(3, 2, |i, j| {
            C64::new(0.3 * i as f64 - 0.2, 0.5 * j as f64 + 0.1 * i as f64)
        });
        let d = density_nonzero_mean(&g0, 2, 3).unwrap();
        let mass = d.total_mass(&settings()).unwrap();
        assert!((mass - 1.0).abs() < 1e-5, "{mass} {:?}", mean_eigenvalues(&g0).unwrap());
    }

    #[test]
    fn doubly_correlated_has_no_density() {
        let spec = ChannelSpec::fully_correlated(ComplexMatrix::identity(2), ComplexMatrix::identity(2)).unwrap();
        assert!(matches!(density(&spec), Err(Error::InvalidArgument(_))));
        assert!(density_semicorrelated(&ComplexMatrix::identity(2), 3, 2).is_err());
    }

    #[test]
    fn coincident_arguments_give_zero() {
        let d = density_semicorrelated(&diag(&[1.0, 2.0, 3.0]), 3, 3).unwrap();
        assert_eq!(d.evaluate(&[1.0, 1.0, 2.0]).unwrap(), 0.0);
        let near = d.evaluate(&[1.0, 1.0 + 1e-7, 2.0]).unwrap();
        assert!((0.0..1e-12).contains(&near));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn densities_nonnegative_and_symmetric(
            l in proptest::collection::vec(0.01f64..8.0, 3),
            t in proptest::collection::vec(0.2f64..3.0, 3),
            g in proptest::collection::vec(-1.5f64..1.5, 6),
        ) {
            let g0 = Mat::from_fn(3, 2, |i, j| C64::new(g[2 * i + j], 0.5 * g[(2 * i + j + 1) % 6]));
            let cases = vec![
                density_iid(3, 3).unwrap(),
                density_semicorrelated(&diag(&t), 3, 3).unwrap(),
                density_semicorrelated(&diag(&t), 3, 2).unwrap(),
                density_semicorrelated(&diag(&t), 3, 1).unwrap(),
                density_semicorrelated(&diag(&t[..2]), 2, 4).unwrap(),
                density_nonzero_mean(&g0, 2, 3).unwrap(),
                density_nonzero_mean(&g0.transpose(), 3, 2).unwrap(),
            ];
            for d in &cases {
                let n = d.dimension();
                let args = &l[..n];
                let v = d.evaluate(args).unwrap();
                prop_assert!(v >= -1e-14 * v.abs().max(1e-300), "{:?}: {}", d.method(), v);
                let mut rev = args.to_vec();
                rev.reverse();
                let w = d.evaluate(&rev).unwrap();
                prop_assert!((v - w).abs() <= 1e-10 * v.abs().max(1e-300));
            }
        }
    }
}
