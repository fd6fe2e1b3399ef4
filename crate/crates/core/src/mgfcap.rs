//! Moment generating function `g(z) = E[det(I + G†G)^z]`, ergodic capacity
//! and outage probability of the mutual information.
//!
//! Every ensemble reduces `g(z)` to one determinant ratio:
//!
//! * semicorrelated (and i.i.d. as its `T = I` confluent limit):
//!   `g = σ ∏ t_i^{nr} det[t_i^{j−1} | Ψ(a_j, a_j+z+1, t_i)] / Δ(t)`;
//! * doubly correlated: `g = c(z) det[F(x_i y_j; z) | x_i^{N..M−1}] / (Δ(x) Δ(y))`
//!   with `x` the spectrum on the side with more antennas;
//! * nonzero mean: `g = σ e^{−Σγ} ∏γ^{N0−N} det[A_k(γ_i) ; B_ek] / Δ(γ)`
//!   with Bessel-weighted moments `A` and Gamma-type moments `B`.
//!
//! Determinants are evaluated with per-column power-of-two scaling and
//! composed with their prefactors in log space. The ergodic capacity
//! `g'(0)` uses the column-replacement identity
//! `∂_z det L / det L = Σ_c (L⁻¹ ∂_z L)_{cc}` (Cramer's rule) for the
//! semicorrelated and doubly correlated ensembles and a Richardson-refined
//! central difference for the nonzero-mean ensemble. Outage probabilities
//! invert the characteristic function `g(iu)` with the Gil-Pelaez formula.

use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::channels::{inv_eigs, ChannelSpec, Variant};
use crate::eigdens::mean_eigenvalues;
use crate::numkit::{
    clusters_as, det_log_scaled, factorial, falling_factorial, grouped_vandermonde_log, hermitian_eigenvalues,
    product_kernel_partial, BorderedRatio, GroupedMatrix, KernelFn, LogValue, Mat, NodeFn, Spectrum, NEAR_NODE_RADIUS,
};
use crate::specfun::{bessel_moment, gauss_legendre, kernel_f_partial, psi_partial, QuadratureSettings};
use crate::{ComplexMatrix, Error, Result, C64};

/// Which closed form produced an [`MgfSample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MgfMethod {
    /// i.i.d. ensemble (semicorrelated form at `T = I`).
    Iid,
    /// Transmit-correlated Ψ determinant.
    SemiCorrelated,
    /// Nonzero-mean Bessel-moment determinant.
    Rician,
    /// Doubly correlated `F`-kernel determinant.
    FullyCorrelated,
}

impl MgfMethod {
    /// Short tag used in reports and CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            MgfMethod::Iid => "iid",
            MgfMethod::SemiCorrelated => "semicorr",
            MgfMethod::Rician => "rician",
            MgfMethod::FullyCorrelated => "fullcorr",
        }
    }
}

/// One evaluation of `g(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgfSample {
    /// Transform argument.
    pub z: C64,
    /// `g(z)`.
    pub value: C64,
    /// Closed form used.
    pub method: MgfMethod,
    /// `ln |det L / Δ|` of the determinant ratio before the prefactor: a
    /// conditioning report (large magnitudes mean heavy cancellation
    /// between the prefactor and the determinant).
    pub log_scale: f64,
    /// Decimal digits of `max(|g|, 1)` lost to cancellation in the
    /// determinant, from Hadamard's bound on the equilibrated matrix.
    pub digits_lost: f64,
}

/// Evaluations losing more digits than this are reported as
/// [`Error::NonConvergence`]. Hadamard's bound is pessimistic by a couple
/// of digits, so results just below the limit still carry several
/// significant digits.
pub const MAX_DIGITS_LOST: f64 = 15.0;

fn sign_of(exponent: usize) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `x ↦ x^power` over complex nodes, with derivatives.
fn monomial<'a>(power: usize) -> NodeFn<'a, C64> {
    Box::new(move |x: &C64, k: usize| {
        Some(if k > power {
            C64::new(0.0, 0.0)
        } else {
            x.powi((power - k) as i32) * falling_factorial(power, k)
        })
    })
}

fn zero_fn<'a>() -> NodeFn<'a, C64> {
    Box::new(|_: &C64, _: usize| Some(C64::new(0.0, 0.0)))
}

#[derive(Clone, Debug)]
enum Form {
    Semi {
        t: Spectrum,
        nt: usize,
        nr: usize,
        iid: bool,
    },
    Full {
        /// Spectrum on the side with `M` antennas (rows).
        x: Spectrum,
        /// Spectrum on the side with `N` antennas (kernel columns).
        y: Spectrum,
        m: usize,
        n: usize,
    },
    Rician {
        gamma: Option<Spectrum>,
        n: usize,
        p: usize,
    },
}

/// Reusable evaluator of `g(z)` for one channel specification.
#[derive(Clone, Debug)]
pub struct MgfEvaluator {
    spec: ChannelSpec,
    form: Form,
    settings: QuadratureSettings,
}

/// Records the first error raised inside a matrix-entry closure.
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn keep<T>(&self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                None
            }
        }
    }

    fn check<T>(self, r: Result<T>) -> Result<T> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

impl MgfEvaluator {
    /// Evaluator with default quadrature settings.
    pub fn new(spec: &ChannelSpec) -> Result<Self> {
        Self::with_settings(spec, QuadratureSettings::default())
    }

    /// Evaluator with explicit quadrature settings for the non-integer-`z`
    /// entries.
    pub fn with_settings(spec: &ChannelSpec, settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        let (nt, nr) = (spec.nt(), spec.nr());
        let form = match spec.variant() {
            Variant::Iid => Form::Semi {
                t: Spectrum::constant(1.0, nt)?,
                nt,
                nr,
                iid: true,
            },
            Variant::SemiCorrelated { .. } => Form::Semi {
                t: inv_eigs(spec)?.0,
                nt,
                nr,
                iid: false,
            },
            Variant::FullyCorrelated { .. } => {
                let (t, r) = inv_eigs(spec)?;
                let r = r.expect("doubly correlated spec carries both spectra");
                let (x, y) = if nt >= nr { (t, r) } else { (r, t) };
                Form::Full {
                    x,
                    y,
                    m: spec.big_m(),
                    n: spec.small_n(),
                }
            }
            Variant::NonzeroMean { g0 } => Form::Rician {
                gamma: mean_eigenvalues(g0)?,
                n: spec.small_n(),
                p: spec.big_m() - spec.small_n(),
            },
        };
        Ok(Self {
            spec: spec.clone(),
            form,
            settings,
        })
    }

    /// The channel specification.
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    /// Closed form in use.
    pub fn method(&self) -> MgfMethod {
        match self.form {
            Form::Semi { iid: true, .. } => MgfMethod::Iid,
            Form::Semi { .. } => MgfMethod::SemiCorrelated,
            Form::Full { .. } => MgfMethod::FullyCorrelated,
            Form::Rician { .. } => MgfMethod::Rician,
        }
    }

    fn check_z(z: C64) -> Result<()> {
        if !(z.re > -1.0) || !z.im.is_finite() {
            return Err(Error::Divergent(format!(
                "g(z) requires Re z > −1 for the defining integrals to converge, got z = {z}"
            )));
        }
        Ok(())
    }

    /// The determinant matrix at `z`, with `∂_z^{dz}` applied to every
    /// `z`-dependent entry (other entries are zeroed when `dz > 0`). Nodes
    /// closer than [`NEAR_NODE_RADIUS`] are evaluated as Newton blocks.
    fn matrix(&self, z: C64, dz: usize) -> Result<GroupedMatrix<C64>> {
        let slot = ErrorSlot::new();
        let s = &self.settings;
        let r = match &self.form {
            Form::Semi { t, nt, nr, .. } => {
                let p = nt.saturating_sub(*nr);
                let row_border: Vec<NodeFn<'_, C64>> = (0..*nt)
                    .map(|j| -> NodeFn<'_, C64> {
                        if j < p {
                            if dz == 0 {
                                monomial(j)
                            } else {
                                zero_fn()
                            }
                        } else {
                            let a = nr + j + 1 - nt;
                            let slot = &slot;
                            Box::new(move |x: &C64, k: usize| slot.keep(psi_partial(a, z, x.re, k, dz, s)))
                        }
                    })
                    .collect();
                BorderedRatio {
                    row_nodes: clusters_as(t),
                    col_nodes: Vec::new(),
                    kernel: None,
                    row_border,
                    col_border: Vec::new(),
                    corner: Mat::zeros(0, *nt),
                }
                .grouped_matrix(NEAR_NODE_RADIUS)
            }
            Form::Full { x, y, m, n } => {
                let m = *m;
                let slot = &slot;
                // Taylor coefficients of Newton blocks reuse φ^{(k)}(xy) heavily.
                let memo: RefCell<HashMap<(u64, usize), C64>> = RefCell::new(HashMap::new());
                let kernel: KernelFn<'_, C64> = Box::new(move |a: &C64, da: usize, b: &C64, db: usize| {
                    let xy = a.re * b.re;
                    product_kernel_partial(a.re, da, b.re, db, |k| {
                        if let Some(v) = memo.borrow().get(&(xy.to_bits(), k)) {
                            return Some(*v);
                        }
                        let v = slot.keep(kernel_f_partial(xy, z, m, k, dz, s))?;
                        memo.borrow_mut().insert((xy.to_bits(), k), v);
                        Some(v)
                    })
                });
                BorderedRatio {
                    row_nodes: clusters_as(x),
                    col_nodes: clusters_as(y),
                    kernel: Some(kernel),
                    row_border: (*n..m).map(|e| if dz == 0 { monomial(e) } else { zero_fn() }).collect(),
                    col_border: Vec::new(),
                    corner: Mat::zeros(0, m - n),
                }
                .grouped_matrix(NEAR_NODE_RADIUS)
            }
            Form::Rician { gamma, n, p } => {
                let (n, p) = (*n, *p);
                let n0 = gamma.as_ref().map_or(0, Spectrum::len);
                let slot = &slot;
                let row_border: Vec<NodeFn<'_, C64>> = (0..n)
                    .map(|k| -> NodeFn<'_, C64> {
                        Box::new(move |g: &C64, a: usize| slot.keep(bessel_moment(k + p + a, p + a, g.re, z, dz, s)))
                    })
                    .collect();
                // Rows left by mean eigenvalues sent to zero:
                // ∫ λ^{k+p+e} (1+λ)^z e^{−λ} dλ / (e!(e+p)!) = (a−1)! Ψ(a, a+z+1, 1) / (e!(e+p)!).
                let mut corner = Mat::zeros(n - n0, n);
                for e in 0..n - n0 {
                    for k in 0..n {
                        let a = k + p + e + 1;
                        let v = slot.keep(psi_partial(a, z, 1.0, 0, dz, s)).unwrap_or_default();
                        corner[(e, k)] = v * (factorial(a - 1) / (factorial(e) * factorial(e + p)));
                    }
                }
                BorderedRatio {
                    row_nodes: gamma.as_ref().map(clusters_as).unwrap_or_default(),
                    col_nodes: Vec::new(),
                    kernel: None,
                    row_border,
                    col_border: (0..n - n0).map(|_| zero_fn()).collect(),
                    corner,
                }
                .grouped_matrix(NEAR_NODE_RADIUS)
            }
        };
        slot.check(r)
    }

    /// Everything multiplying `det L / Δ`.
    fn prefactor(&self, z: C64) -> LogValue {
        match &self.form {
            Form::Semi { t, nt, nr, .. } => {
                // σ = (−1)^{nt(nt−1)/2 + p(p−1)/2}, p = nt − nr ≥ 0. Using
                // (−1)^{nt(nt−1)/2} for both orderings would violate g(0) = 1
                // for nt > nr whenever p ≡ 2, 3 (mod 4).
                let p = nt.saturating_sub(*nr);
                let sigma = sign_of(nt * (nt - 1) / 2 + p * p.saturating_sub(1) / 2);
                let ln_t: f64 = t.values().iter().map(|v| v.ln()).sum();
                LogValue::from_c64(C64::new(sigma, 0.0)).times(LogValue::from_ln(*nr as f64 * ln_t))
            }
            Form::Full { m, n, .. } => {
                let (m, n) = (*m, *n);
                let mut acc = LogValue::ONE;
                for j in 1..(m - n) {
                    let f = LogValue::from_c64(z + (m - j) as f64);
                    for _ in 0..(m - n - j) {
                        acc = acc.times(f);
                    }
                }
                for i in 2..=m {
                    let f = LogValue::from_c64(z + (i - 1) as f64);
                    for _ in 0..(i - 1) {
                        acc = acc.try_div(f).expect("Re z > −1 keeps z + i − 1 nonzero");
                    }
                }
                acc
            }
            Form::Rician { gamma, n, .. } => {
                let n0 = gamma.as_ref().map_or(0, Spectrum::len);
                let (sum_g, ln_g) = gamma
                    .as_ref()
                    .map_or((0.0, 0.0), |g| (g.sum(), g.values().iter().map(|v| v.ln()).sum()));
                let sigma = sign_of((n - n0) * n0);
                LogValue::from_c64(C64::new(sigma, 0.0)).times(LogValue::from_ln(-sum_g - (n - n0) as f64 * ln_g))
            }
        }
    }

    /// `g(z)` for `Re z > −1`.
    pub fn eval(&self, z: C64) -> Result<MgfSample> {
        Self::check_z(z)?;
        let gm = self.matrix(z, 0)?;
        let den = grouped_vandermonde_log(&gm.row_groups).times(grouped_vandermonde_log(&gm.col_groups));
        let ratio = det_log_scaled(&gm.matrix)?.try_div(den)?;
        let value = ratio.times(self.prefactor(z)).value();
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::Divergent(format!("g({z}) overflowed")));
        }
        // Cancellation counts against max(|g|, 1): tiny |g(iu)| far out on the
        // imaginary axis only needs absolute accuracy.
        let lost = (digits_lost(&gm.matrix) + value.norm().log10().min(0.0)).max(0.0);
        check_digits(lost, &format!("g({z})"))?;
        Ok(MgfSample {
            z,
            value,
            method: self.method(),
            log_scale: ratio.log_abs,
            digits_lost: lost,
        })
    }

    /// `d/dz ln g` at `z = 0` from the column-replacement identity; with
    /// `g(0) = 1` this is the ergodic capacity. Available for every form.
    pub fn analytic_first_moment(&self) -> Result<f64> {
        let z0 = C64::new(0.0, 0.0);
        // ∂_z ln det L = tr(L⁻¹ ∂_z L); z-independent columns of ∂_z L vanish.
        let l = self.matrix(z0, 0)?.matrix;
        let d = self.matrix(z0, 1)?.matrix;
        let mut value = trace_of_solve(&l, &d)?.re;
        if let Form::Full { m, n, .. } = self.form {
            // d/dz ln of the prefactor at z = 0.
            value += (1..(m - n)).map(|j| j as f64 / (n + j) as f64).sum::<f64>() - (m - 1) as f64;
        }
        Ok(value)
    }

    /// Ergodic capacity `E[I]` in nats.
    ///
    /// Semicorrelated, i.i.d. and doubly correlated ensembles use the
    /// analytic column-replacement formula; the nonzero-mean ensemble uses a
    /// central difference of `g` at `h = 1e-4` refined by one Richardson
    /// step.
    pub fn ergodic(&self) -> Result<f64> {
        match self.form {
            Form::Rician { .. } => self.richardson_first(1e-4).map(|(v, _)| v),
            _ => self.analytic_first_moment(),
        }
    }

    fn real_g(&self, z: f64) -> Result<f64> {
        Ok(self.eval(C64::new(z, 0.0))?.value.re)
    }

    /// Central difference `(g(h) − g(−h))/2h` with one Richardson step;
    /// returns the estimate and the size of the Richardson correction.
    fn richardson_first(&self, h: f64) -> Result<(f64, f64)> {
        let d = |h: f64| -> Result<f64> { Ok((self.real_g(h)? - self.real_g(-h)?) / (2.0 * h)) };
        let (d1, d2) = (d(h)?, d(h / 2.0)?);
        let r = (4.0 * d2 - d1) / 3.0;
        Ok((r, (r - d2).abs()))
    }

    /// `E[I²] = g''(0)` by a Richardson table of second central differences.
    fn second_moment(&self) -> Result<(f64, f64)> {
        let g0 = self.real_g(0.0)?;
        let steps = [0.2, 0.1, 0.05, 0.025];
        let mut row: Vec<f64> = Vec::with_capacity(steps.len());
        for &h in &steps {
            row.push((self.real_g(h)? - 2.0 * g0 + self.real_g(-h)?) / (h * h));
        }
        // Successive eliminations of the h², h⁴, … error terms.
        let mut table = vec![row];
        let mut factor = 4.0;
        while table.last().map_or(0, Vec::len) > 1 {
            let prev = table.last().expect("nonempty table");
            let next: Vec<f64> = prev
                .windows(2)
                .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
                .collect();
            table.push(next);
            factor *= 4.0;
        }
        let diag: Vec<f64> = table.iter().map(|r| *r.last().expect("nonempty row")).collect();
        let tail: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let k = tail.len();
        if k >= 2 && tail[k - 1] > tail[k - 2] && tail[k - 1] > 1e-9 * diag[k].abs().max(1.0) {
            return Err(Error::NonConvergence(format!(
                "second-moment Richardson tail is not decreasing: {tail:?}"
            )));
        }
        Ok((diag[k], tail[k - 1]))
    }
}

/// Scales rows and columns of `a` (and the same rows/columns of `b`) by
/// powers of two so every row and column has unit-order maximum. Powers of
/// two keep the scaling exact; `L⁻¹D` keeps its diagonal, `det` its digits.
fn equilibrate(a: &mut nalgebra::DMatrix<C64>, mut b: Option<&mut nalgebra::DMatrix<C64>>) {
    let n = a.nrows();
    let pow2 = |mx: f64| (mx > 0.0 && mx.is_finite()).then(|| 2f64.powi(-(mx.log2().round() as i32)));
    for j in 0..n {
        if let Some(s) = pow2((0..n).map(|i| a[(i, j)].norm()).fold(0.0, f64::max)) {
            for i in 0..n {
                a[(i, j)] *= s;
                if let Some(b) = b.as_deref_mut() {
                    b[(i, j)] *= s;
                }
            }
        }
    }
    for i in 0..n {
        if let Some(s) = pow2((0..n).map(|j| a[(i, j)].norm()).fold(0.0, f64::max)) {
            for j in 0..n {
                a[(i, j)] *= s;
                if let Some(b) = b.as_deref_mut() {
                    b[(i, j)] *= s;
                }
            }
        }
    }
}

/// `log10(∏ ‖row‖ / |det|)` of an equilibrated matrix: how many leading
/// digits of the entries cancel in the determinant (Hadamard's bound).
fn hadamard_digits(a: &nalgebra::DMatrix<C64>) -> f64 {
    let rows: f64 = a.row_iter().map(|r| r.norm().log10()).sum();
    let det = a.clone().lu().determinant().norm();
    if det > 0.0 {
        (rows - det.log10()).max(0.0)
    } else {
        f64::INFINITY
    }
}

/// Digits lost in `det m`, see [`MgfSample::digits_lost`].
fn digits_lost(m: &Mat<C64>) -> f64 {
    if m.rows() == 0 {
        return 0.0;
    }
    let mut a = m.to_nalgebra();
    equilibrate(&mut a, None);
    hadamard_digits(&a)
}

fn check_digits(lost: f64, what: &str) -> Result<()> {
    if lost > MAX_DIGITS_LOST {
        return Err(Error::NonConvergence(format!(
            "{what}: determinant cancels {lost:.1} decimal digits (limit {MAX_DIGITS_LOST}); \
             the spectrum is too spread for double precision"
        )));
    }
    Ok(())
}

/// `tr(L⁻¹ D)` after equilibration, refusing matrices whose determinant
/// cancels more than [`MAX_DIGITS_LOST`] digits.
fn trace_of_solve(l: &Mat<C64>, d: &Mat<C64>) -> Result<C64> {
    let n = l.rows();
    let mut a = l.to_nalgebra();
    let mut b = d.to_nalgebra();
    equilibrate(&mut a, Some(&mut b));
    check_digits(hadamard_digits(&a), "ergodic capacity")?;
    let x = a.lu().solve(&b).ok_or(Error::Singular("MGF determinant at z = 0"))?;
    Ok((0..n).map(|c| x[(c, c)]).sum())
}

/// `g(z)` for `spec`.
pub fn mgf(spec: &ChannelSpec, z: C64) -> Result<MgfSample> {
    MgfEvaluator::new(spec)?.eval(z)
}

/// Ergodic capacity `E[I]` in nats.
pub fn ergodic_capacity(spec: &ChannelSpec) -> Result<f64> {
    MgfEvaluator::new(spec)?.ergodic()
}

/// A derivative of `g` at zero with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    /// Derivative order (1 or 2).
    pub order: usize,
    /// `E[I]` or `E[I²]`.
    pub value: f64,
    /// Estimated absolute error (zero for the analytic first moment).
    pub error: f64,
    /// `E[I²] − E[I]²` when `order = 2`.
    pub variance: Option<f64>,
}

/// `g'(0) = E[I]` (order 1) or `g''(0) = E[I²]` (order 2, with the variance).
pub fn mgf_derivative_at_zero(spec: &ChannelSpec, order: usize) -> Result<MomentEstimate> {
    let ev = MgfEvaluator::new(spec)?;
    match order {
        1 => {
            let (value, error) = match ev.form {
                Form::Rician { .. } => ev.richardson_first(1e-4)?,
                _ => (ev.analytic_first_moment()?, 0.0),
            };
            Ok(MomentEstimate {
                order,
                value,
                error,
                variance: None,
            })
        }
        2 => {
            let (value, error) = ev.second_moment()?;
            let mean = ev.ergodic()?;
            Ok(MomentEstimate {
                order,
                value,
                error,
                variance: Some(value - mean * mean),
            })
        }
        _ => Err(Error::InvalidArgument(format!(
            "moments are available for order 1 or 2, got {order}"
        ))),
    }
}

/// Which tail of the mutual-information distribution to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutageConvention {
    /// `P(I > I_out)`.
    Exceedance,
    /// `P(I < I_out)`, the conventional outage probability.
    #[default]
    Cdf,
}

/// Parameters of one outage evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageQuery {
    /// Threshold `I_out` in nats.
    pub i_out: f64,
    /// Optional cap on the inversion frequency `u`.
    pub max_frequency: Option<f64>,
    /// Gauss–Legendre nodes per frequency panel.
    pub nodes: usize,
    /// Reported tail.
    pub convention: OutageConvention,
}

impl OutageQuery {
    /// Default inversion settings for threshold `i_out`.
    pub fn new(i_out: f64) -> Self {
        Self {
            i_out,
            max_frequency: None,
            nodes: 20,
            convention: OutageConvention::Cdf,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.i_out >= 0.0) || !self.i_out.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "outage threshold must be finite and ≥ 0, got {}",
                self.i_out
            )));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidArgument("outage panels need at least 2 nodes".into()));
        }
        if let Some(f) = self.max_frequency {
            if !(f > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "max frequency must be positive, got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of one outage evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageResult {
    /// Threshold `I_out`.
    pub i_out: f64,
    /// `P(I > I_out)`.
    pub exceedance: f64,
    /// `P(I < I_out) = 1 − exceedance`.
    pub cdf: f64,
    /// Estimated absolute error of both probabilities.
    pub error: f64,
    /// `false` if the frequency integral was truncated before `|g(iu)|`
    /// became negligible and the tail could not be accelerated; the
    /// probabilities are then partial values.
    pub converged: bool,
    /// Frequency panels integrated.
    pub panels: usize,
    /// Convention of [`value`](Self::value).
    pub convention: OutageConvention,
}

impl OutageResult {
    /// The probability selected by the query's convention.
    pub fn value(&self) -> f64 {
        match self.convention {
            OutageConvention::Exceedance => self.exceedance,
            OutageConvention::Cdf => self.cdf,
        }
    }
}

/// Integrand cut-off: panels stop once `|g(iu)|/u` falls below it on a
/// whole panel.
pub const CF_CUTOFF: f64 = 1e-10;

/// Panel cap before switching to tail acceleration.
pub const MAX_PANELS: usize = 10_000;

const BATCH: usize = 8;
const EULER_TERMS: usize = 24;

/// `g(iu)` sampled on consecutive Gauss–Legendre panels, shared by every
/// threshold of an outage curve.
struct CfPanels {
    /// `(u, weight, g(iu))` per node, panel by panel.
    nodes: Vec<Vec<(f64, f64, C64)>>,
    end: f64,
    converged: bool,
}

/// Jensen bound `ln det(I + E[G†G]) ≥ E[I]`, used to size frequency panels.
pub fn capacity_upper_bound(spec: &ChannelSpec) -> Result<f64> {
    let nr = spec.nr() as f64;
    let mean_gram: ComplexMatrix = match spec.variant() {
        Variant::Iid => ComplexMatrix::identity(spec.nt()).scale(&C64::new(nr, 0.0)),
        Variant::SemiCorrelated { t } => t.scale(&C64::new(nr, 0.0)),
        Variant::FullyCorrelated { t, r } => t.scale(&r.trace()),
        Variant::NonzeroMean { g0 } => g0
            .adjoint()
            .matmul(g0)?
            .add(&ComplexMatrix::identity(spec.nt()).scale(&C64::new(nr, 0.0)))?,
    };
    let spectrum = hermitian_eigenvalues(&ComplexMatrix::identity(spec.nt()).add(&mean_gram)?)?;
    Ok(spectrum.values().iter().map(|v| v.ln()).sum())
}

fn sample_panel(ev: &MgfEvaluator, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Result<Vec<(f64, f64, C64)>> {
    let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| {
            let u = mid + half * x;
            Ok((u, w * half, ev.eval(C64::new(0.0, u))?.value))
        })
        .collect()
}

impl CfPanels {
    fn build(ev: &MgfEvaluator, width: f64, nodes: usize, max_frequency: Option<f64>) -> Self {
        let rule = gauss_legendre(nodes);
        let cap = max_frequency.map_or(MAX_PANELS, |f| ((f / width).ceil() as usize).clamp(1, MAX_PANELS));
        let mut out = Vec::new();
        let mut converged = false;
        'outer: while out.len() < cap {
            let start = out.len();
            let batch: Vec<Result<Vec<(f64, f64, C64)>>> = (start..(start + BATCH).min(cap))
                .into_par_iter()
                .map(|k| sample_panel(ev, k as f64 * width, (k + 1) as f64 * width, &rule))
                .collect();
            for panel in batch {
                match panel {
                    Ok(p) => {
                        let small = p.iter().all(|(u, _, g)| g.norm() / u < CF_CUTOFF);
                        out.push(p);
                        if small {
                            converged = true;
                            break 'outer;
                        }
                    }
                    // A failed g(iu) evaluation ends the sampled range; the
                    // result is reported as a partial value.
                    Err(_) => break 'outer,
                }
            }
        }
        let end = out.len() as f64 * width;
        Self {
            nodes: out,
            end,
            converged,
        }
    }

    /// `(1/π) ∫_0^U Im[g(iu) e^{−iux}]/u du` over the sampled panels.
    fn integral(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for p in &self.nodes {
            for &(u, w, g) in p {
                s += w * (g * C64::new(0.0, -u * x).exp()).im / u;
            }
        }
        s / std::f64::consts::PI
    }

    fn last_magnitude(&self) -> f64 {
        self.nodes
            .last()
            .map_or(1.0, |p| p.iter().map(|(_, _, g)| g.norm()).fold(0.0, f64::max))
    }
}

/// Euler transform (iterated averaging of partial sums) of a series whose
/// terms alternate in sign. Returns the sum and the last correction size.
fn euler_sum(terms: &[f64]) -> (f64, f64) {
    let mut partial: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let mut last = f64::INFINITY;
    while partial.len() > 1 {
        let next: Vec<f64> = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        last = (next[next.len() - 1] - partial[partial.len() - 1]).abs();
        partial = next;
    }
    (partial[0], last)
}

/// Tail `(1/π) ∫_U^∞ Im[g(iu)e^{−iux}]/u du` by half-period blocks of the
/// `e^{−iux}` oscillation summed with the Euler transform.
fn accelerated_tail(ev: &MgfEvaluator, start: f64, x: f64, nodes: usize) -> Option<(f64, f64)> {
    if x <= 0.0 {
        return None;
    }
    let rule = gauss_legendre(nodes);
    let width = std::f64::consts::PI / x;
    let blocks: Vec<Result<f64>> = (0..EULER_TERMS)
        .into_par_iter()
        .map(|k| {
            let a = start + k as f64 * width;
            let p = sample_panel(ev, a, a + width, &rule)?;
            Ok(p.iter()
                .map(|&(u, w, g)| w * (g * C64::new(0.0, -u * x).exp()).im / u)
                .sum::<f64>()
                / std::f64::consts::PI)
        })
        .collect();
    let terms: Vec<f64> = blocks.into_iter().collect::<Result<_>>().ok()?;
    let (sum, err) = euler_sum(&terms);
    Some((sum, err))
}

/// Outage probabilities on a grid of thresholds, sharing one set of
/// characteristic-function samples.
///
/// Gil-Pelaez: `P(I > x) = 1/2 + (1/π) ∫_0^∞ Im[g(iu) e^{−iux}]/u du`; the
/// integrand is regular at `u = 0` (the `1/u` pole contributes the `1/2`
/// half residue). The frequency axis is cut into panels of width
/// `4π / max(1, x_max, E[I] bound)` (two periods of the fastest
/// oscillation), sampled until `|g(iu)|/u` drops below
/// [`CF_CUTOFF`] or [`MAX_PANELS`] panels; a remaining tail is summed by
/// Euler acceleration over half-periods of `e^{−iux}`.
pub fn outage_curve(spec: &ChannelSpec, grid: &[f64], template: &OutageQuery) -> Result<Vec<OutageResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("outage grid is empty".into()));
    }
    for &x in grid {
        OutageQuery { i_out: x, ..*template }.validate()?;
    }
    let ev = MgfEvaluator::new(spec)?;
    let x_max = grid.iter().cloned().fold(0.0, f64::max);
    let scale = 1f64.max(x_max).max(capacity_upper_bound(spec)?);
    let width = 4.0 * std::f64::consts::PI / scale;
    let panels = CfPanels::build(&ev, width, template.nodes, template.max_frequency);
    Ok(grid
        .iter()
        .map(|&x| {
            let body = panels.integral(x);
            let (tail, error, converged) = if panels.converged {
                (0.0, panels.last_magnitude() / std::f64::consts::PI, true)
            } else {
                match accelerated_tail(&ev, panels.end, x, template.nodes) {
                    Some((t, e)) if e < 1e-6 => (t, e, true),
                    Some((t, e)) => (t, e, false),
                    None => (0.0, panels.last_magnitude() / panels.end.max(1e-300), false),
                }
            };
            let exceedance = 0.5 + body + tail;
            OutageResult {
                i_out: x,
                exceedance,
                cdf: 1.0 - exceedance,
                error,
                converged,
                panels: panels.nodes.len(),
                convention: template.convention,
            }
        })
        .collect())
}

/// Outage probability at one threshold.
pub fn outage(spec: &ChannelSpec, q: &OutageQuery) -> Result<OutageResult> {
    Ok(outage_curve(spec, &[q.i_out], q)?.remove(0))
}
