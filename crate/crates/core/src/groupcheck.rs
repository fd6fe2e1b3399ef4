//! Numeric checks of the unitary-group identities behind the closed forms.
//!
//! Irreducible polynomial representations of `U(M)` are labelled by
//! non-increasing vectors `m`. This module evaluates their dimensions
//! exactly (two independent formulas), their characters (Weyl's ratio
//! through the confluent evaluator, Jacobi–Trudi from matrix traces, and
//! Gelfand–Tsetlin pattern sums), the character expansion of `e^{x tr A}`,
//! the Cauchy–Binet sum identity, and the Haar orthogonality of explicit
//! representation matrices for small `M`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::standard_complex_normal;
use crate::numkit::{
    cluster_values, confluent_ratio, det, falling_factorial, vandermonde, ConfluentRatioProblem, Mat, NodeFn,
    DEFAULT_MERGE_TOL,
};
use crate::{ComplexMatrix, Error, Rational, RationalMatrix, Result, C64};

/// An irreducible representation `m = (m_1 ≥ … ≥ m_M ≥ 0)` of `U(M)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Representation {
    m: Vec<usize>,
}

impl Representation {
    /// Validates the labels (non-empty, non-increasing).
    pub fn new(m: Vec<usize>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidArgument("representation needs M ≥ 1 labels".into()));
        }
        if let Some(i) = m.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "representation labels must be non-increasing: m[{i}] = {} < m[{}] = {}",
                m[i],
                i + 1,
                m[i + 1]
            )));
        }
        Ok(Self { m })
    }

    /// The trivial representation of `U(rank)`.
    pub fn trivial(rank: usize) -> Result<Self> {
        Self::new(vec![0; rank])
    }

    /// The labels `m`.
    pub fn labels(&self) -> &[usize] {
        &self.m
    }

    /// `M`, the rank of the unitary group.
    pub fn rank(&self) -> usize {
        self.m.len()
    }

    /// `|m| = Σ m_i`, the polynomial degree.
    pub fn degree(&self) -> usize {
        self.m.iter().sum()
    }

    /// Shifted labels `k_i = m_i − i + M` (1-based `i`), strictly decreasing.
    pub fn shifted_labels(&self) -> Vec<usize> {
        let mm = self.rank();
        self.m.iter().enumerate().map(|(i, &mi)| mi + mm - 1 - i).collect()
    }

    /// All representations of `U(rank)` with `m_1 ≤ cutoff`, in
    /// colexicographic order (compare from the last label).
    pub fn enumerate(rank: usize, cutoff: usize) -> Vec<Representation> {
        fn rec(prefix: &mut Vec<usize>, rank: usize, max: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == rank {
                out.push(prefix.clone());
                return;
            }
            for v in 0..=max {
                prefix.push(v);
                rec(prefix, rank, v, out);
                prefix.pop();
            }
        }
        let mut all = Vec::new();
        if rank > 0 {
            rec(&mut Vec::new(), rank, cutoff, &mut all);
        }
        all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        all.into_iter().map(|m| Representation { m }).collect()
    }
}

fn big_factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn rational(n: BigInt) -> Rational {
    Rational::from_integer(n)
}

fn rational_to_u64(r: &Rational, what: &str) -> Result<u64> {
    if !r.is_integer() {
        return Err(Error::InvalidArgument(format!("{what} evaluated to non-integer {r}")));
    }
    r.to_integer()
        .to_u64()
        .ok_or_else(|| Error::InvalidArgument(format!("{what} {r} is not a representable dimension")))
}

/// Dimension from the inverse-factorial determinant
/// `∏ (M+m_i−i)!/(M−i)! · det[1/(m_i−i+j)!]` in exact arithmetic.
pub fn dimension(rep: &Representation) -> Result<u64> {
    let mm = rep.rank();
    let m = rep.labels();
    let a = RationalMatrix::from_fn(mm, mm, |i, j| {
        let e = m[i] as i64 - i as i64 + j as i64;
        if e < 0 {
            Rational::zero()
        } else {
            Rational::new(BigInt::one(), big_factorial(e as usize))
        }
    });
    let mut d = det(&a)?;
    for (i, &mi) in m.iter().enumerate() {
        d = d * rational(big_factorial(mm + mi - 1 - i)) / rational(big_factorial(mm - 1 - i));
    }
    rational_to_u64(&d, "dimension")
}

/// Dimension from the Vandermonde form
/// `∏ 1/(M−i)! · (−1)^{M(M−1)/2} · Δ(k)`, `Δ(k) = ∏_{i<j}(k_j − k_i)`.
pub fn dimension_vandermonde(rep: &Representation) -> Result<u64> {
    let mm = rep.rank();
    let k: Vec<Rational> = rep
        .shifted_labels()
        .into_iter()
        .map(|v| rational(BigInt::from(v)))
        .collect();
    let mut d = vandermonde(&k);
    for i in 0..mm {
        d /= rational(big_factorial(mm - 1 - i));
    }
    if (mm * (mm - 1) / 2) % 2 == 1 {
        d = -d;
    }
    rational_to_u64(&d, "Vandermonde dimension")
}

/// Weyl character `χ_m` at the eigenvalues `a` of a group element.
///
/// Evaluated as `(−1)^{M(M−1)/2} det(a_i^{m_j+M−j}) / Δ(a)` with
/// `Δ(a) = ∏_{i<j}(a_j − a_i)`: the sign makes `χ_0 = 1` under this
/// Vandermonde orientation. Coincident eigenvalues (e.g. the identity) go
/// through the confluent limit.
pub fn weyl_character(rep: &Representation, eigenvalues: &[C64]) -> Result<C64> {
    let mm = rep.rank();
    if eigenvalues.len() != mm {
        return Err(Error::DimensionMismatch {
            what: "eigenvalues vs representation rank",
            expected: mm,
            found: eigenvalues.len(),
        });
    }
    if let Some(i) = eigenvalues.iter().position(|a| *a == C64::new(0.0, 0.0)) {
        return Err(Error::InvalidArgument(format!("eigenvalue {i} is zero")));
    }
    let functions: Vec<NodeFn<C64>> = rep
        .labels()
        .iter()
        .enumerate()
        .map(|(j, &mj)| {
            let e = mj + mm - 1 - j;
            Box::new(move |a: &C64, k: usize| {
                Some(if k > e {
                    C64::new(0.0, 0.0)
                } else {
                    a.powi((e - k) as i32) * falling_factorial(e, k)
                })
            }) as NodeFn<C64>
        })
        .collect();
    let problem = ConfluentRatioProblem::new(functions, cluster_values(eigenvalues, DEFAULT_MERGE_TOL))?;
    let v = confluent_ratio(&problem)?;
    Ok(if (mm * (mm - 1) / 2) % 2 == 1 { -v } else { v })
}

/// Character `χ_m(A)` of an arbitrary square matrix by the Jacobi–Trudi
/// determinant `det[h_{m_i−i+j}]`, with complete symmetric functions `h_k`
/// obtained from the power sums `tr A^k` by Newton's identities.
pub fn character_of_matrix(rep: &Representation, a: &ComplexMatrix) -> Result<C64> {
    let mm = rep.rank();
    if a.rows() != mm || a.cols() != mm {
        return Err(Error::DimensionMismatch {
            what: "matrix size vs representation rank",
            expected: mm,
            found: a.rows(),
        });
    }
    let kmax = rep.labels()[0] + mm;
    let mut power_sums = Vec::with_capacity(kmax + 1);
    power_sums.push(C64::new(mm as f64, 0.0));
    let mut ak = ComplexMatrix::identity(mm);
    for _ in 1..=kmax {
        ak = ak.matmul(a)?;
        power_sums.push(ak.trace());
    }
    let mut h = vec![C64::new(1.0, 0.0)];
    for k in 1..=kmax {
        let s: C64 = (1..=k).map(|i| power_sums[i] * h[k - i]).sum();
        h.push(s / k as f64);
    }
    let m = rep.labels();
    let jt = Mat::from_fn(mm, mm, |i, j| {
        let idx = m[i] as i64 - i as i64 + j as i64;
        if idx < 0 {
            C64::new(0.0, 0.0)
        } else {
            h[idx as usize]
        }
    });
    det(&jt)
}

/// Character at `diag(a)` as the sum over Gelfand–Tsetlin patterns with top
/// row `m` of `∏_k a_k^{w_k}`, `w_k` = (row-`k` sum) − (row-`(k−1)` sum).
/// The number of patterns is the dimension.
pub fn character_by_patterns(rep: &Representation, a: &[C64]) -> Result<(C64, u64)> {
    let mm = rep.rank();
    if a.len() != mm {
        return Err(Error::DimensionMismatch {
            what: "diagonal entries vs representation rank",
            expected: mm,
            found: a.len(),
        });
    }
    fn rec(row: &[usize], a: &[C64], acc: C64, out: &mut (C64, u64)) {
        let len = row.len();
        let top: usize = row.iter().sum();
        if len == 1 {
            out.0 += acc * a[0].powi(top as i32);
            out.1 += 1;
            return;
        }
        // Next row ν interlaces: row[i] ≥ ν[i] ≥ row[i+1].
        let mut nu = vec![0usize; len - 1];
        fn fill(i: usize, row: &[usize], nu: &mut Vec<usize>, a: &[C64], acc: C64, top: usize, out: &mut (C64, u64)) {
            if i == nu.len() {
                let below: usize = nu.iter().sum();
                let w = a[row.len() - 1].powi((top - below) as i32);
                rec(nu, a, acc * w, out);
                return;
            }
            for v in row[i + 1]..=row[i] {
                nu[i] = v;
                fill(i + 1, row, nu, a, acc, top, out);
            }
        }
        fill(0, row, &mut nu, a, acc, top, out);
    }
    let mut out = (C64::new(0.0, 0.0), 0u64);
    rec(rep.labels(), a, C64::new(1.0, 0.0), &mut out);
    Ok(out)
}

/// Character-expansion coefficient
/// `α_m(x) = x^{|m|} ∏ (M−i)!/(M+m_i−i)! · d_m`.
pub fn character_coefficient(rep: &Representation, x: C64) -> Result<C64> {
    let mm = rep.rank();
    let mut c = rational(BigInt::from(dimension(rep)?));
    for (i, &mi) in rep.labels().iter().enumerate() {
        c = c * rational(big_factorial(mm - 1 - i)) / rational(big_factorial(mm + mi - 1 - i));
    }
    let cf = c
        .to_f64()
        .ok_or_else(|| Error::InvalidArgument("coefficient not representable".into()))?;
    Ok(x.powi(rep.degree() as i32) * cf)
}

/// `|e^{x tr A} − Σ_{m_1 ≤ cutoff} α_m(x) χ_m(A)|` for a square `A`.
pub fn expansion_residual(a: &ComplexMatrix, x: C64, cutoff: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let exact = (x * a.trace()).exp();
    let mut sum = C64::new(0.0, 0.0);
    for rep in Representation::enumerate(a.rows(), cutoff) {
        let alpha = character_coefficient(&rep, x)?;
        if alpha == C64::new(0.0, 0.0) {
            continue;
        }
        sum += alpha * character_of_matrix(&rep, a)?;
    }
    Ok((exact - sum).norm())
}

/// Series `W(z) = Σ w(k) z^k` paired with the Cauchy–Binet identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CauchyBinetWeight {
    /// `w(k) = 1/k!`, `W = exp`.
    Exponential,
    /// `w(k) = (−1)^k/k!`, `W(z) = e^{−z}`.
    NegativeExponential,
    /// `w(k) = 1/(k!)²`, `W(z) = I₀(2√z)`.
    Bessel,
}

impl CauchyBinetWeight {
    /// Series coefficient `w(k)`.
    pub fn coefficient(self, k: usize) -> f64 {
        let f = crate::numkit::factorial(k);
        match self {
            Self::Exponential => 1.0 / f,
            Self::NegativeExponential => {
                if k.is_multiple_of(2) {
                    1.0 / f
                } else {
                    -1.0 / f
                }
            }
            Self::Bessel => 1.0 / (f * f),
        }
    }

    /// The summed function `W(z)`.
    pub fn function(self, z: f64) -> f64 {
        match self {
            Self::Exponential => z.exp(),
            Self::NegativeExponential => (-z).exp(),
            Self::Bessel if z >= 0.0 => crate::specfun::bessel_i0(2.0 * z.sqrt()),
            Self::Bessel => {
                // Σ z^k/(k!)² for negative z (the J₀ branch).
                let mut term = 1.0;
                let mut sum = 1.0;
                for k in 1..200 {
                    term *= z / (k * k) as f64;
                    sum += term;
                    if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                        break;
                    }
                }
                sum
            }
        }
    }
}

/// `|Σ_{k_1>…>k_M≥0, k_1≤cutoff} det[a_i^{k_j}] det[b_i^{k_j}] ∏ w(k_j) − det[W(a_i b_j)]|`.
pub fn cauchy_binet_residual(a: &[f64], b: &[f64], weight: CauchyBinetWeight, cutoff: usize) -> Result<f64> {
    let mm = a.len();
    if b.len() != mm {
        return Err(Error::DimensionMismatch {
            what: "Cauchy–Binet vectors",
            expected: mm,
            found: b.len(),
        });
    }
    if mm == 0 {
        return Err(Error::InvalidArgument("Cauchy–Binet needs M ≥ 1".into()));
    }
    let exact = det(&Mat::from_fn(mm, mm, |i, j| weight.function(a[i] * b[j])))?;
    let mut sum = 0.0;
    let mut ks: Vec<usize> = Vec::with_capacity(mm);
    fn rec(
        ks: &mut Vec<usize>,
        mm: usize,
        max: usize,
        a: &[f64],
        b: &[f64],
        weight: CauchyBinetWeight,
        sum: &mut f64,
    ) -> Result<()> {
        if ks.len() == mm {
            let da = det(&Mat::from_fn(mm, mm, |i, j| a[i].powi(ks[j] as i32)))?;
            let db = det(&Mat::from_fn(mm, mm, |i, j| b[i].powi(ks[j] as i32)))?;
            let w: f64 = ks.iter().map(|&k| weight.coefficient(k)).product();
            *sum += da * db * w;
            return Ok(());
        }
        let remaining = mm - ks.len();
        for k in (remaining - 1)..=max {
            ks.push(k);
            if k > 0 || remaining == 1 {
                rec(ks, mm, k.saturating_sub(1), a, b, weight, sum)?;
            }
            ks.pop();
        }
        Ok(())
    }
    rec(&mut ks, mm, cutoff, a, b, weight, &mut sum)?;
    Ok((sum - exact).abs())
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    let z = Mat::from_fn(m, m, |_, _| standard_complex_normal(rng));
    let qr = z.to_nalgebra().qr();
    let q = ComplexMatrix::from_nalgebra(&qr.q());
    let r = qr.r();
    Mat::from_fn(m, m, |i, j| {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { C64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `B† R B` for an isometry `B` whose range is `R`-invariant.
fn restrict(r: &ComplexMatrix, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
    basis.adjoint().matmul(&r.matmul(basis)?)
}

/// Orthonormal basis (columns) of the symmetric part of `V⊗V`, `dim V = n`.
fn symmetric_basis(n: usize) -> ComplexMatrix {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(n * n, pairs.len(), |row, col| {
        let (i, j) = pairs[col];
        let (p, q) = (row / n, row % n);
        let hit = (p == i && q == j) || (p == j && q == i);
        C64::new(
            if !hit {
                0.0
            } else if i == j {
                1.0
            } else {
                s
            },
            0.0,
        )
    })
}

/// Orthonormal basis (columns) of `Λ²V ⊂ V⊗V`, pairs `i<j` in lexicographic order.
fn antisymmetric_basis(n: usize) -> ComplexMatrix {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(n * n, pairs.len(), |row, col| {
        let (i, j) = pairs[col];
        let (p, q) = (row / n, row % n);
        C64::new(
            if p == i && q == j {
                s
            } else if p == j && q == i {
                -s
            } else {
                0.0
            },
            0.0,
        )
    })
}

/// Orthonormal basis of the complement of the `Λ³` line in `V ⊗ Λ²V`, `dim V = 3`.
fn mixed_basis() -> ComplexMatrix {
    // Λ²V basis order: f01, f02, f12. e0∧e1∧e2 ∝ e0⊗f12 − e1⊗f02 + e2⊗f01.
    let mut line = vec![C64::new(0.0, 0.0); 9];
    let s = 1.0 / 3f64.sqrt();
    line[2] = C64::new(s, 0.0);
    line[3 + 1] = C64::new(-s, 0.0);
    line[6] = C64::new(s, 0.0);
    let mut basis: Vec<Vec<C64>> = vec![line];
    for e in 0..9 {
        let mut v = vec![C64::new(0.0, 0.0); 9];
        v[e] = C64::new(1.0, 0.0);
        for b in &basis {
            let dot: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 && basis.len() < 9 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    Mat::from_fn(9, 8, |i, j| basis[j + 1][i])
}

/// Explicit matrix `U^{(m)}` of a unitary `U` for `M ≤ 3`, `m_1 ≤ 2`, built
/// from symmetric/antisymmetric tensor constructions (a factor `det U` is
/// split off while `m_M > 0`).
pub fn representation_matrix(rep: &Representation, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mm = rep.rank();
    if u.rows() != mm || u.cols() != mm {
        return Err(Error::DimensionMismatch {
            what: "unitary size vs representation rank",
            expected: mm,
            found: u.rows(),
        });
    }
    let m = rep.labels();
    if mm > 3 || m[0] > 2 {
        return Err(Error::InvalidArgument(format!(
            "explicit representation matrices cover M ≤ 3, m_1 ≤ 2; got {m:?}"
        )));
    }
    let shift = m[mm - 1];
    if shift > 0 {
        let reduced = Representation::new(m.iter().map(|v| v - shift).collect())?;
        let d = det(u)?.powi(shift as i32);
        return Ok(representation_matrix(&reduced, u)?.scale(&d));
    }
    let uu = || kron(u, u);
    let lambda2 = |u: &ComplexMatrix| restrict(&kron(u, u), &antisymmetric_basis(mm));
    match m {
        _ if m.iter().all(|&v| v == 0) => Ok(ComplexMatrix::identity(1)),
        [1, 0] | [1, 0, 0] => Ok(u.clone()),
        [2, 0] | [2, 0, 0] => restrict(&uu(), &symmetric_basis(mm)),
        [1, 1, 0] => lambda2(u),
        [2, 2, 0] => {
            let l = lambda2(u)?;
            restrict(&kron(&l, &l), &symmetric_basis(3))
        }
        [2, 1, 0] => restrict(&kron(u, &lambda2(u)?), &mixed_basis()),
        _ => Err(Error::InvalidArgument(format!("no explicit construction for {m:?}"))),
    }
}

/// Outcome of a Haar-orthogonality Monte Carlo check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalityReport {
    /// Largest `|mean − expected|` over all entries `(i, j, k, l)`.
    pub max_residual: f64,
    /// Standard error of the entry attaining `max_residual`.
    pub standard_error: f64,
    /// Largest residual in units of its own standard error.
    pub max_z: f64,
    /// Mean of `|U^{(m)}_{ij}|²` over all entries of the first representation.
    pub diagonal_mean: f64,
    /// Dimension of the first representation.
    pub dimension: usize,
    /// Number of Haar samples.
    pub samples: usize,
}

/// Monte Carlo check of `∫ U^{(m)}_{ij} U^{(m')*}_{kl} dU = δ_{mm'} δ_{ik} δ_{jl}/d_m`.
pub fn haar_orthogonality_residual(
    a: &Representation,
    b: &Representation,
    samples: usize,
    seed: u64,
) -> Result<OrthogonalityReport> {
    if a.rank() != b.rank() {
        return Err(Error::DimensionMismatch {
            what: "representation ranks",
            expected: a.rank(),
            found: b.rank(),
        });
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two Haar samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe = ComplexMatrix::identity(a.rank());
    let (da, db) = (
        representation_matrix(a, &probe)?.rows(),
        representation_matrix(b, &probe)?.rows(),
    );
    let n_entries = da * da * db * db;
    let mut sum = vec![C64::new(0.0, 0.0); n_entries];
    let mut sum_sq = vec![0.0; n_entries];
    for _ in 0..samples {
        let u = haar_unitary(a.rank(), &mut rng);
        let ua = representation_matrix(a, &u)?;
        let ub = representation_matrix(b, &u)?;
        let mut idx = 0;
        for i in 0..da {
            for j in 0..da {
                let x = ua[(i, j)];
                for k in 0..db {
                    for l in 0..db {
                        let v = x * ub[(k, l)].conj();
                        sum[idx] += v;
                        sum_sq[idx] += v.norm_sqr();
                        idx += 1;
                    }
                }
            }
        }
    }
    let n = samples as f64;
    let same = a == b;
    let mut report = OrthogonalityReport {
        max_residual: 0.0,
        standard_error: 0.0,
        max_z: 0.0,
        diagonal_mean: 0.0,
        dimension: da,
        samples,
    };
    let mut diag_sum = 0.0;
    let mut idx = 0;
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    let mean = sum[idx] / n;
                    let var = (sum_sq[idx] / n - mean.norm_sqr()).max(0.0) * n / (n - 1.0);
                    let se = (var / n).sqrt();
                    let expected = if same && i == k && j == l { 1.0 / da as f64 } else { 0.0 };
                    let resid = (mean - expected).norm();
                    if same && i == k && j == l {
                        diag_sum += mean.re;
                    }
                    if resid > report.max_residual {
                        report.max_residual = resid;
                        report.standard_error = se;
                    }
                    if se > 0.0 {
                        report.max_z = report.max_z.max(resid / se);
                    }
                    idx += 1;
                }
            }
        }
    }
    report.diagonal_mean = if same { diag_sum / (da * da) as f64 } else { f64::NAN };
    Ok(report)
}
