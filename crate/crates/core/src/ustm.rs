//! Received-signal density for unitary space-time modulation over a
//! transmit-correlated block-fading channel.
//!
//! Over a coherence block of `T_coh` symbols the receiver sees
//! `Y = G X + Z` (`Y`, `Z`: `nr × T_coh`; `X`: `nt × T_coh` with
//! `X X† = I`; `G = W T^{1/2}` with i.i.d. `CN(0,1)` `W` and `Z`). Given `X`,
//! `Y` is Gaussian; averaging over Haar-distributed isometries gives the
//! received density `p(Y)`, an HCIZ integral in the eigenvalues `y` of
//! `Y†Y` and `t̃ = T_i / (1 + T_i)`.
//!
//! The `T_coh − nt` zero entries of `t̃` and the `T_coh − Q` zero
//! eigenvalues of `Y†Y` (`Q = min(T_coh, nr)`) are structural and are taken
//! analytically, leaving the bordered ratio
//! `det[ẽ(y_i, t̃_j) | y_i^k ; t̃_j^{e−p} | e! δ_{ek}] / (Δ(y) ∏ y^{T_coh−Q} Δ(t̃))`
//! with `p = T_coh − nt` and the remainder kernel
//! `ẽ(y, t) = Σ_{k ≥ p} y^k t^{k−p} / k!` (the exponential minus its first
//! `p` Taylor terms, divided by `t^p`). Using `ẽ` instead of `e^{yt}` removes
//! the cancellation that otherwise destroys the small-`T` limit. Remaining
//! accidental degeneracies (equal `T_i`, equal `y_i`) go through the
//! confluent evaluator.

use rand::Rng;

use crate::channels::standard_complex_normal;
use crate::groupcheck::haar_unitary;
use crate::mcsim::{gram_eigenvalues, mean_of, McEstimate};
use crate::numkit::{
    clusters_as, factorial, falling_factorial, hermitian_eigenvalues, hermitian_function, hermitian_sqrt, ln_factorial,
    BorderedRatio, KernelFn, LogValue, Mat, NodeFn, Spectrum, HERMITIAN_TOL,
};
use crate::{ComplexMatrix, Error, Result, C64};

/// Tolerance on `X X† = I` for [`conditional_density`].
pub const ISOMETRY_TOL: f64 = 1e-10;

/// Coherence block and transmit correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct UstmConfig {
    t_coh: usize,
    nt: usize,
    nr: usize,
    t: ComplexMatrix,
    t_eigs: Spectrum,
}

impl UstmConfig {
    /// Validates `T` (Hermitian positive definite, `nt × nt`) and
    /// `t_coh ≥ nt`.
    pub fn new(t_coh: usize, nr: usize, t: ComplexMatrix) -> Result<Self> {
        t.check_hermitian(HERMITIAN_TOL)?;
        let nt = t.rows();
        if nt == 0 || nr == 0 {
            return Err(Error::InvalidArgument(
                "USTM needs at least one antenna per side".into(),
            ));
        }
        if t_coh < nt {
            return Err(Error::InvalidArgument(format!(
                "coherence length {t_coh} is shorter than nt = {nt}: no isometric input exists"
            )));
        }
        let t_eigs = hermitian_eigenvalues(&t)?;
        Ok(Self {
            t_coh,
            nt,
            nr,
            t,
            t_eigs,
        })
    }

    /// Coherence length `T_coh`.
    pub fn t_coh(&self) -> usize {
        self.t_coh
    }

    /// Transmit antennas.
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Receive antennas.
    pub fn nr(&self) -> usize {
        self.nr
    }

    /// `Q = min(T_coh, nr)`, the number of nonzero eigenvalues of `Y†Y`.
    pub fn q(&self) -> usize {
        self.t_coh.min(self.nr)
    }

    /// Transmit correlation.
    pub fn correlation(&self) -> &ComplexMatrix {
        &self.t
    }

    /// The mapped spectrum `t̃`.
    pub fn mapped_spectrum(&self) -> Result<MappedSpectrum> {
        let nonzero = self.t_eigs.map(|v| v / (1.0 + v))?;
        Ok(MappedSpectrum {
            nonzero,
            padding: self.t_coh - self.nt,
        })
    }
}

/// `t̃_i = T_i / (1 + T_i)` followed by `T_coh − nt` zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedSpectrum {
    /// The `nt` values in `(0, 1)`, descending with degeneracy clusters.
    pub nonzero: Spectrum,
    /// Size of the zero cluster.
    pub padding: usize,
}

impl MappedSpectrum {
    /// All `T_coh` values, zeros last.
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.nonzero.values().to_vec();
        v.extend(std::iter::repeat_n(0.0, self.padding));
        v
    }
}

fn check_y(cfg: &UstmConfig, y: &ComplexMatrix) -> Result<()> {
    if y.rows() != cfg.nr || y.cols() != cfg.t_coh {
        return Err(Error::DimensionMismatch {
            what: "received block Y (nr × T_coh)",
            expected: cfg.nr * cfg.t_coh,
            found: y.rows() * y.cols(),
        });
    }
    Ok(())
}

/// `∂_y^a ∂_t^b ẽ(y, t)` with `ẽ(y, t) = Σ_{k ≥ p} y^k t^{k−p} / k!`.
fn remainder_kernel(y: f64, a: usize, t: f64, b: usize, p: usize) -> Option<f64> {
    let k0 = (p + b).max(a);
    let ln_r = k0 as f64 * y.ln() + (k0 - p) as f64 * t.ln() - ln_factorial(k0);
    // r_k = y^k t^{k−p} / k!, advanced by r_{k+1} = r_k y t / (k + 1).
    let mut r = ln_r.exp();
    let scale = y.powi(a as i32) * t.powi(b as i32);
    let mut sum = 0.0;
    for k in k0..k0 + 4000 {
        let term = r * falling_factorial(k, a) * falling_factorial(k - p, b);
        sum += term;
        if k as f64 > y * t + 2.0 && term.abs() <= 1e-17 * sum.abs() {
            return Some(sum / scale);
        }
        r *= y * t / (k + 1) as f64;
    }
    None
}

fn real(x: &C64) -> f64 {
    x.re
}

/// `p(Y)`, the received density at `Y` (`nr × T_coh`).
///
/// Depends on `Y` only through the eigenvalues of `Y†Y`, which must be
/// nonzero (`Y` of full rank `Q`).
pub fn received_density(cfg: &UstmConfig, y: &ComplexMatrix) -> Result<f64> {
    Ok(received_density_log(cfg, y)?.value().re)
}

/// `p(Y)` in log form, for blocks where the density under- or overflows.
pub fn received_density_log(cfg: &UstmConfig, y: &ComplexMatrix) -> Result<LogValue> {
    check_y(cfg, y)?;
    let (t_coh, nt, nr, q) = (cfg.t_coh, cfg.nt, cfg.nr, cfg.q());
    let ys = gram_eigenvalues(y)?;
    if ys.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "received block is rank deficient: Y†Y needs Q nonzero eigenvalues".into(),
        ));
    }
    let ys = Spectrum::new(ys)?;
    let tt = cfg.mapped_spectrum()?;
    let p = t_coh - nt;
    let kernel: KernelFn<'_, C64> = Box::new(move |y: &C64, a: usize, t: &C64, b: usize| {
        remainder_kernel(real(y), a, real(t), b, p).map(|v| C64::new(v, 0.0))
    });
    let row_border: Vec<NodeFn<'_, C64>> = (0..p)
        .map(|k| -> NodeFn<'_, C64> {
            Box::new(move |y: &C64, a: usize| {
                Some(C64::new(
                    if a > k {
                        0.0
                    } else {
                        falling_factorial(k, a) * real(y).powi((k - a) as i32)
                    },
                    0.0,
                ))
            })
        })
        .collect();
    let col_border: Vec<NodeFn<'_, C64>> = (0..t_coh - q)
        .map(|e| -> NodeFn<'_, C64> {
            Box::new(move |t: &C64, b: usize| {
                Some(C64::new(
                    if e >= p + b {
                        falling_factorial(e - p, b) * real(t).powi((e - p - b) as i32)
                    } else {
                        0.0
                    },
                    0.0,
                ))
            })
        })
        .collect();
    let corner = Mat::from_fn(t_coh - q, p, |e, k| {
        C64::new(if e == k { factorial(e) } else { 0.0 }, 0.0)
    });
    let ratio = BorderedRatio {
        row_nodes: clusters_as(&ys),
        col_nodes: clusters_as(&tt.nonzero),
        kernel: Some(kernel),
        row_border,
        col_border,
        corner,
    }
    .ratio_log()?;
    // Zero nodes placed after the nonzero ones contribute (−1)^{Q(T_coh−Q)}
    // and (−1)^{nt(T_coh−nt)} through the Vandermonde products.
    let sign = if (q * (t_coh - q) + nt * p) % 2 == 0 { 1.0 } else { -1.0 };
    let ln_prefactor = (1..t_coh).map(ln_factorial).sum::<f64>()
        - (0..p).map(ln_factorial).sum::<f64>()
        - (0..t_coh - q).map(ln_factorial).sum::<f64>()
        - (t_coh * nr) as f64 * std::f64::consts::PI.ln()
        - nr as f64 * cfg.t_eigs.values().iter().map(|v| v.ln_1p()).sum::<f64>()
        - ys.sum()
        - (t_coh - q) as f64 * ys.values().iter().map(|v| v.ln()).sum::<f64>();
    Ok(ratio
        .times(LogValue::from_ln(ln_prefactor))
        .times(LogValue::from_c64(C64::new(sign, 0.0))))
}

/// Gaussian density of `Y` given the isometric input `X` (`nt × T_coh`):
/// `exp(−tr(Y [I − X† T(I+T)^{−1} X] Y†)) / (π^{T_coh nr} det(I+T)^{nr})`.
pub fn conditional_density(cfg: &UstmConfig, y: &ComplexMatrix, x: &ComplexMatrix) -> Result<f64> {
    check_y(cfg, y)?;
    if x.rows() != cfg.nt || x.cols() != cfg.t_coh {
        return Err(Error::DimensionMismatch {
            what: "input block X (nt × T_coh)",
            expected: cfg.nt * cfg.t_coh,
            found: x.rows() * x.cols(),
        });
    }
    let gram = x.matmul(&x.adjoint())?;
    let dev = gram
        .add(&ComplexMatrix::identity(cfg.nt).scale(&C64::new(-1.0, 0.0)))?
        .max_abs();
    if dev > ISOMETRY_TOL {
        return Err(Error::InvalidArgument(format!(
            "input block is not an isometry: ‖X X† − I‖_max = {dev:e}"
        )));
    }
    let mapped = hermitian_function(&cfg.t, |v| v / (1.0 + v))?;
    let a =
        ComplexMatrix::identity(cfg.t_coh).add(&x.adjoint().matmul(&mapped)?.matmul(x)?.scale(&C64::new(-1.0, 0.0)))?;
    let quad = y.matmul(&a)?.matmul(&y.adjoint())?.trace().re;
    let ln_norm = (cfg.t_coh * cfg.nr) as f64 * std::f64::consts::PI.ln()
        + cfg.nr as f64 * cfg.t_eigs.values().iter().map(|v| v.ln_1p()).sum::<f64>();
    Ok((-quad - ln_norm).exp())
}

/// Haar-distributed isometry: the first `nt` rows of a Haar unitary of size
/// `T_coh`.
pub fn haar_isometry<R: Rng + ?Sized>(cfg: &UstmConfig, rng: &mut R) -> ComplexMatrix {
    haar_unitary(cfg.t_coh, rng).select_rows(&(0..cfg.nt).collect::<Vec<_>>())
}

/// One received block from the generative model `Y = W T^{1/2} X + Z` with
/// a Haar isometry `X`.
pub fn sample_received<R: Rng + ?Sized>(cfg: &UstmConfig, rng: &mut R) -> Result<ComplexMatrix> {
    let w = Mat::from_fn(cfg.nr, cfg.nt, |_, _| standard_complex_normal(rng));
    let g = w.matmul(&hermitian_sqrt(&cfg.t)?)?;
    let x = haar_isometry(cfg, rng);
    let z = Mat::from_fn(cfg.nr, cfg.t_coh, |_, _| standard_complex_normal(rng));
    g.matmul(&x)?.add(&z)
}

/// Monte Carlo marginal `∫ p(Y|X) dX` over `n` Haar isometries.
pub fn received_density_mc(cfg: &UstmConfig, y: &ComplexMatrix, n: u64, seed: u64) -> Result<McEstimate> {
    check_y(cfg, y)?;
    mean_of(n, seed, |rng| conditional_density(cfg, y, &haar_isometry(cfg, rng)))
}
