//! Monte Carlo oracle for the mutual information `I = ln det(I + G†G)`.
//!
//! Draw `k` of a run seeded with `s` always uses the generator
//! [`draw_rng(s, k)`](crate::channels::draw_rng). Draws are grouped into
//! fixed-size chunks evaluated in parallel; each chunk keeps a Welford
//! accumulator and the accumulators are merged in chunk order, so every
//! estimate is bit-identical whatever the thread count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{draw_rng, sample_channel_with, ChannelSpec};
use crate::numkit::hermitian_eigenvalues;
use crate::{ComplexMatrix, Error, Result};

/// Draws per parallel chunk.
pub const CHUNK: u64 = 2048;

/// Smallest accepted sample size.
pub const MIN_SAMPLES: u64 = 100;

/// A Monte Carlo estimate of a functional of `I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    /// Number of draws.
    pub n: u64,
    /// Sample mean.
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean, `√(variance / n)`.
    pub stderr: f64,
    /// Seed of the run.
    pub seed: u64,
}

/// Functional of the mutual information to average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional {
    /// `I`.
    MeanI,
    /// `I²`.
    SecondMomentI,
    /// `e^{zI} = det(I + G†G)^z` for real `z`.
    MgfAt(f64),
    /// Indicator `I > x`.
    Exceedance(f64),
}

impl Functional {
    fn apply(self, i: f64) -> f64 {
        match self {
            Functional::MeanI => i,
            Functional::SecondMomentI => i * i,
            Functional::MgfAt(z) => (z * i).exp(),
            Functional::Exceedance(x) => f64::from(u8::from(i > x)),
        }
    }
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }
}

/// Eigenvalues of `G†G` (descending, length `min(nt, nr)`), from the smaller
/// Gram matrix.
pub fn gram_eigenvalues(g: &ComplexMatrix) -> Result<Vec<f64>> {
    let gram = if g.rows() < g.cols() {
        g.matmul(&g.adjoint())?
    } else {
        g.adjoint().matmul(g)?
    };
    let n = gram.rows();
    let shifted = ComplexMatrix::identity(n).add(&gram)?;
    Ok(hermitian_eigenvalues(&shifted)?
        .values()
        .iter()
        .map(|v| (v - 1.0).max(0.0))
        .collect())
}

/// `I = Σ ln(1 + λ_i)` over the eigenvalues of `G†G`.
pub fn mutual_information(g: &ComplexMatrix) -> Result<f64> {
    let gram = if g.rows() < g.cols() {
        g.matmul(&g.adjoint())?
    } else {
        g.adjoint().matmul(g)?
    };
    let shifted = ComplexMatrix::identity(gram.rows()).add(&gram)?;
    Ok(hermitian_eigenvalues(&shifted)?.values().iter().map(|v| v.ln()).sum())
}

fn check_n(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} draws, got {n}"
        )));
    }
    Ok(())
}

fn chunks(n: u64) -> impl IndexedParallelIterator<Item = std::ops::Range<u64>> {
    let count = n.div_ceil(CHUNK) as usize;
    (0..count)
        .into_par_iter()
        .map(move |c| c as u64 * CHUNK..((c as u64 + 1) * CHUNK).min(n))
}

fn draw_information(spec: &ChannelSpec, seed: u64, k: u64) -> Result<f64> {
    mutual_information(&sample_channel_with(spec, &mut draw_rng(seed, k)))
}

/// Monte Carlo mean of `f(rng_k)` over draws `k = 0..n`, where `rng_k` is
/// [`draw_rng(seed, k)`]; the deterministic chunked reduction used by every
/// estimator in this crate.
pub fn mean_of(n: u64, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Sync) -> Result<McEstimate> {
    check_n(n)?;
    let parts: Vec<Result<Moments>> = chunks(n)
        .map(|range| {
            let mut m = Moments::default();
            for k in range {
                m.push(f(&mut draw_rng(seed, k))?);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total = total.merge(p?);
    }
    let variance = total.m2 / (total.n - 1) as f64;
    Ok(McEstimate {
        n,
        mean: total.mean,
        variance,
        stderr: (variance / n as f64).sqrt(),
        seed,
    })
}

/// Monte Carlo estimate of `E[f(I)]` from `n ≥ 100` draws.
pub fn estimate(spec: &ChannelSpec, functional: Functional, n: u64, seed: u64) -> Result<McEstimate> {
    mean_of(n, seed, |rng| {
        Ok(functional.apply(mutual_information(&sample_channel_with(spec, rng))?))
    })
}

/// Empirical `P(I > x)` at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalPoint {
    /// Threshold.
    pub i_out: f64,
    /// Fraction of draws with `I > i_out`.
    pub survival: f64,
    /// Binomial standard error.
    pub stderr: f64,
}

/// `n` draws of `I`, in draw order.
pub fn sample_information(spec: &ChannelSpec, n: u64, seed: u64) -> Result<Vec<f64>> {
    check_n(n)?;
    let parts: Vec<Result<Vec<f64>>> = chunks(n)
        .map(|range| range.map(|k| draw_information(spec, seed, k)).collect())
        .collect();
    let mut out = Vec::with_capacity(n as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `n` draws of the eigenvalues of `G†G` (each descending), in draw order.
pub fn sample_eigenvalues(spec: &ChannelSpec, n: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_n(n)?;
    let parts: Vec<Result<Vec<Vec<f64>>>> = chunks(n)
        .map(|range| {
            range
                .map(|k| gram_eigenvalues(&sample_channel_with(spec, &mut draw_rng(seed, k))))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Empirical survival function `P(I > x)` on `grid` from a single pass of
/// `n` draws. Non-increasing in `x` by construction.
pub fn empirical_survival(spec: &ChannelSpec, grid: &[f64], n: u64, seed: u64) -> Result<Vec<SurvivalPoint>> {
    let mut draws = sample_information(spec, n, seed)?;
    draws.sort_by(f64::total_cmp);
    Ok(grid
        .iter()
        .map(|&x| {
            let above = draws.len() - draws.partition_point(|&v| v <= x);
            let p = above as f64 / n as f64;
            SurvivalPoint {
                i_out: x,
                survival: p,
                stderr: (p * (1.0 - p) / n as f64).sqrt(),
            }
        })
        .collect())
}

/// One-sample Kolmogorov–Smirnov distance between the empirical
/// distribution of `samples` and a model CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Mat;
    use crate::specfun::exp_integral_e1;
    use crate::C64;
    use proptest::prelude::*;

    #[test]
    fn rejects_tiny_runs() {
        let s = ChannelSpec::iid(1, 1).unwrap();
        assert!(estimate(&s, Functional::MeanI, 99, 1).is_err());
    }

    #[test]
    fn scalar_channel_moments() {
        // λ ~ Exp(1): E[ln(1+λ)] = e E₁(1), E[1+λ] = 2.
        let s = ChannelSpec::iid(1, 1).unwrap();
        let m = estimate(&s, Functional::MeanI, 100_000, 3).unwrap();
        let exact = std::f64::consts::E * exp_integral_e1(1.0).unwrap();
        assert!((m.mean - exact).abs() < 4.0 * m.stderr);
        let g1 = estimate(&s, Functional::MgfAt(1.0), 100_000, 4).unwrap();
        assert!((g1.mean - 2.0).abs() < 4.0 * g1.stderr);
        let p = estimate(&s, Functional::Exceedance(1.0), 100_000, 5).unwrap();
        let exact = (-(1f64.exp() - 1.0)).exp();
        assert!((p.mean - exact).abs() < 4.0 * p.stderr);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = ChannelSpec::iid(2, 3).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate(&s, Functional::SecondMomentI, 10_000, 9).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.variance.to_bits(), b.variance.to_bits());
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 37) % 101) as f64 * 0.1).collect();
        let mut seq = Moments::default();
        xs.iter().for_each(|&x| seq.push(x));
        let mut parts = Moments::default();
        for c in xs.chunks(77) {
            let mut m = Moments::default();
            c.iter().for_each(|&x| m.push(x));
            parts = parts.merge(m);
        }
        assert!((seq.mean - parts.mean).abs() < 1e-12);
        assert!((seq.m2 - parts.m2).abs() < 1e-9 * seq.m2);
    }

    #[test]
    fn information_from_eigenvalues() {
        let g = Mat::from_fn(3, 2, |i, j| C64::new(i as f64 - j as f64, 0.5 * (i + j) as f64));
        let eig = gram_eigenvalues(&g).unwrap();
        assert_eq!(eig.len(), 2);
        let from_eig: f64 = eig.iter().map(|l| (1.0 + l).ln()).sum();
        assert!((mutual_information(&g).unwrap() - from_eig).abs() < 1e-12);
        assert!((mutual_information(&g.transpose()).unwrap() - from_eig).abs() < 1e-12);
    }

    #[test]
    fn survival_and_ks() {
        let s = ChannelSpec::iid(1, 1).unwrap();
        let surv = empirical_survival(&s, &[0.0, 0.5, 1.0, 2.0], 20_000, 2).unwrap();
        assert_eq!(surv[0].survival, 1.0);
        assert!(surv.windows(2).all(|w| w[1].survival <= w[0].survival));
        let draws = sample_information(&s, 20_000, 2).unwrap();
        let ks = ks_distance(&draws, |x| 1.0 - (-(x.exp() - 1.0)).exp());
        assert!(ks < 0.02, "{ks}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn information_is_nonnegative(seed in 0u64..1000, nt in 1usize..4, nr in 1usize..4) {
            let s = ChannelSpec::iid(nt, nr).unwrap();
            for v in sample_information(&s, 100, seed).unwrap() {
                prop_assert!(v >= 0.0);
            }
        }
    }
}
