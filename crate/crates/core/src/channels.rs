//! Channel ensembles: correlation model, validated specifications, sampling.
//!
//! Orientation: `G` is `nr × nt`, `T` (`nt × nt`) is the transmit and `R`
//! (`nr × nr`) the receive correlation. Draws are
//! `G = R^{1/2} W T^{1/2}` (fully correlated), `W T^{1/2}`
//! (transmit-correlated), `G0 + W` (nonzero mean) or `W` (i.i.d.), with
//! `W` i.i.d. `CN(0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numkit::{hermitian_eigenvalues, hermitian_sqrt, Mat, Spectrum, HERMITIAN_TOL};
use crate::specfun::{integrate, QuadratureSettings};
use crate::{ComplexMatrix, Error, Result, C64};

/// Uniform linear array with a Gaussian power azimuth spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayGeometry {
    /// Number of antennas.
    pub antenna_count: usize,
    /// Inter-antenna spacing in wavelengths.
    pub d_lambda: f64,
    /// Angle spread (standard deviation) in degrees.
    pub delta_deg: f64,
}

impl ArrayGeometry {
    /// Validated geometry (`count ≥ 1`, `d_λ ≥ 0`, `δ > 0`).
    pub fn new(antenna_count: usize, d_lambda: f64, delta_deg: f64) -> Result<Self> {
        if antenna_count < 1 {
            return Err(Error::InvalidArgument("array needs at least one antenna".into()));
        }
        if !(d_lambda >= 0.0) || !d_lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "spacing must be finite and ≥ 0, got {d_lambda}"
            )));
        }
        if !(delta_deg > 0.0) || !delta_deg.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "angle spread must be positive, got {delta_deg}"
            )));
        }
        Ok(Self {
            antenna_count,
            d_lambda,
            delta_deg,
        })
    }
}

/// Correlation between antennas `lag` apart:
/// `∫_{−180}^{180} e^{2πi·lag·d_λ sin(φπ/180) − φ²/(2δ²)} dφ / √(2πδ²)`.
///
/// The Gaussian weight is even and the phase odd in `φ`, so the value is real.
pub fn correlation_lag(geom: &ArrayGeometry, lag: usize, settings: &QuadratureSettings) -> Result<f64> {
    let d = geom.delta_deg;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * d * d).sqrt();
    let w = 2.0 * std::f64::consts::PI * lag as f64 * geom.d_lambda;
    let f = |phi: f64| {
        let g = (-phi * phi / (2.0 * d * d)).exp() * norm;
        C64::new(g * (w * (phi.to_radians()).sin()).cos(), 0.0)
    };
    // Integrate panel-wise so the bulk of the Gaussian lands on its own panels.
    let edges: Vec<f64> = {
        let mut e = vec![-180.0, 180.0];
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            let x = k * d;
            if x > -180.0 && x < 180.0 {
                e.push(x);
            }
        }
        e.sort_by(|a, b| a.partial_cmp(b).expect("finite edges"));
        e.dedup();
        e
    };
    let mut total = 0.0;
    for p in edges.windows(2) {
        total += integrate(f, p[0], p[1], settings)?.value.re;
    }
    Ok(total)
}

/// The `n × n` Hermitian Toeplitz correlation matrix `T_ab = c(a − b)`.
pub fn correlation_matrix(geom: &ArrayGeometry) -> Result<ComplexMatrix> {
    let settings = QuadratureSettings {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..Default::default()
    };
    let n = geom.antenna_count;
    let mut lags = Vec::with_capacity(n);
    for lag in 0..n {
        let c = correlation_lag(geom, lag, &settings)
            .map_err(|e| Error::NonConvergence(format!("correlation entry (a, b) = (1, {}) failed: {e}", lag + 1)))?;
        lags.push(c);
    }
    Ok(Mat::from_fn(n, n, |a, b| C64::new(lags[a.abs_diff(b)], 0.0)))
}

/// The four Gaussian ensembles.
#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    /// i.i.d. `CN(0,1)` entries.
    Iid,
    /// Transmit correlation `T` only.
    SemiCorrelated {
        /// `nt × nt` transmit correlation.
        t: ComplexMatrix,
    },
    /// Mean `G0`, unit-variance i.i.d. fluctuations.
    NonzeroMean {
        /// `nr × nt` mean matrix.
        g0: ComplexMatrix,
    },
    /// Kronecker correlation `T` and `R`.
    FullyCorrelated {
        /// `nt × nt` transmit correlation.
        t: ComplexMatrix,
        /// `nr × nr` receive correlation.
        r: ComplexMatrix,
    },
}

/// A validated channel specification with cached spectra and square roots.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    nt: usize,
    nr: usize,
    variant: Variant,
    t_sqrt: Option<ComplexMatrix>,
    r_sqrt: Option<ComplexMatrix>,
    t_inv: Option<Spectrum>,
    r_inv: Option<Spectrum>,
}

fn check_dims(nt: usize, nr: usize) -> Result<()> {
    if nt < 1 || nr < 1 {
        return Err(Error::InvalidArgument(format!(
            "antenna counts must be ≥ 1, got nt = {nt}, nr = {nr}"
        )));
    }
    Ok(())
}

fn check_square(a: &ComplexMatrix, n: usize, what: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n,
            found: a.rows(),
        });
    }
    a.check_hermitian(HERMITIAN_TOL)
}

fn inverse_spectrum(a: &ComplexMatrix) -> Result<Spectrum> {
    hermitian_eigenvalues(a)?.map(|v| 1.0 / v)
}

impl ChannelSpec {
    /// i.i.d. channel with `nt` transmit and `nr` receive antennas.
    pub fn iid(nt: usize, nr: usize) -> Result<Self> {
        check_dims(nt, nr)?;
        Ok(Self {
            nt,
            nr,
            variant: Variant::Iid,
            t_sqrt: None,
            r_sqrt: None,
            t_inv: None,
            r_inv: None,
        })
    }

    /// Transmit-correlated channel; `t` must be Hermitian positive definite.
    pub fn semi_correlated(t: ComplexMatrix, nr: usize) -> Result<Self> {
        check_dims(t.rows().max(1), nr)?;
        let nt = t.rows();
        check_dims(nt, nr)?;
        check_square(&t, nt, "transmit correlation size")?;
        let t_inv = inverse_spectrum(&t)?;
        Ok(Self {
            nt,
            nr,
            t_sqrt: Some(hermitian_sqrt(&t)?),
            r_sqrt: None,
            t_inv: Some(t_inv),
            r_inv: None,
            variant: Variant::SemiCorrelated { t },
        })
    }

    /// Nonzero-mean channel with `nr × nt` mean `g0`.
    pub fn nonzero_mean(g0: ComplexMatrix) -> Result<Self> {
        let (nr, nt) = (g0.rows(), g0.cols());
        check_dims(nt, nr)?;
        if g0.as_slice().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("mean matrix has non-finite entries".into()));
        }
        Ok(Self {
            nt,
            nr,
            variant: Variant::NonzeroMean { g0 },
            t_sqrt: None,
            r_sqrt: None,
            t_inv: None,
            r_inv: None,
        })
    }

    /// Kronecker-correlated channel; `t` is `nt × nt`, `r` is `nr × nr`.
    pub fn fully_correlated(t: ComplexMatrix, r: ComplexMatrix) -> Result<Self> {
        let (nt, nr) = (t.rows(), r.rows());
        check_dims(nt, nr)?;
        check_square(&t, nt, "transmit correlation size")?;
        check_square(&r, nr, "receive correlation size")?;
        Ok(Self {
            nt,
            nr,
            t_sqrt: Some(hermitian_sqrt(&t)?),
            r_sqrt: Some(hermitian_sqrt(&r)?),
            t_inv: Some(inverse_spectrum(&t)?),
            r_inv: Some(inverse_spectrum(&r)?),
            variant: Variant::FullyCorrelated { t, r },
        })
    }

    /// Transmit antennas.
    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Receive antennas.
    pub fn nr(&self) -> usize {
        self.nr
    }

    /// `M = max(nt, nr)`.
    pub fn big_m(&self) -> usize {
        self.nt.max(self.nr)
    }

    /// `N = min(nt, nr)`: the number of nonzero eigenvalues of `G†G`.
    pub fn small_n(&self) -> usize {
        self.nt.min(self.nr)
    }

    /// The ensemble.
    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    /// Short ensemble name used in reports and CSV output.
    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            Variant::Iid => "iid",
            Variant::SemiCorrelated { .. } => "semicorrelated",
            Variant::NonzeroMean { .. } => "nonzero-mean",
            Variant::FullyCorrelated { .. } => "fully-correlated",
        }
    }
}

/// `t = eig(T^{−1})` and, for the fully correlated ensemble, `r = eig(R^{−1})`,
/// both descending with degeneracy clusters.
pub fn inv_eigs(spec: &ChannelSpec) -> Result<(Spectrum, Option<Spectrum>)> {
    match (&spec.t_inv, &spec.r_inv) {
        (Some(t), r) => Ok((t.clone(), r.clone())),
        _ => Err(Error::InvalidArgument(format!(
            "inverse correlation eigenvalues are defined for correlated ensembles, not {}",
            spec.variant_name()
        ))),
    }
}

/// One standard complex Gaussian `CN(0, 1)`: Box–Muller with `N(0, 1/2)`
/// real and imaginary parts (a zero uniform is redrawn).
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    C64::from_polar((-u1.ln()).sqrt(), std::f64::consts::TAU * u2)
}

/// Generator for draw `index` of a run seeded with `seed`: a ChaCha8 stream
/// selected by the draw counter, so results do not depend on scheduling.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One channel draw using the supplied generator.
pub fn sample_channel_with<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> ComplexMatrix {
    let w = Mat::from_fn(spec.nr, spec.nt, |_, _| standard_complex_normal(rng));
    let mul = |a: &ComplexMatrix, b: &ComplexMatrix| a.matmul(b).expect("conforming dimensions");
    match &spec.variant {
        Variant::Iid => w,
        Variant::SemiCorrelated { .. } => mul(&w, spec.t_sqrt.as_ref().expect("cached root")),
        Variant::NonzeroMean { g0 } => g0.add(&w).expect("conforming dimensions"),
        Variant::FullyCorrelated { .. } => mul(
            &mul(spec.r_sqrt.as_ref().expect("cached root"), &w),
            spec.t_sqrt.as_ref().expect("cached root"),
        ),
    }
}

/// One channel draw from a fresh generator seeded with `seed`.
pub fn sample_channel(spec: &ChannelSpec, seed: u64) -> ComplexMatrix {
    sample_channel_with(spec, &mut draw_rng(seed, 0))
}
