//! Acceptance criteria, each at its full tolerance.
//!
//! Runs without the libtest harness so that every criterion prints exactly
//! one `PASS`/`FAIL` line even when the run succeeds. The process exits
//! non-zero if any criterion fails. Every random draw is seeded, so the
//! outcome is reproducible.

use std::error::Error;
use std::process::{Command, ExitCode};
use std::time::Instant;

use mimo_charexp::channels::{correlation_matrix, draw_rng, standard_complex_normal, ArrayGeometry, ChannelSpec};
use mimo_charexp::eigdens::{density_iid, density_nonzero_mean, density_semicorrelated, JointDensity};
use mimo_charexp::groupcheck::{
    cauchy_binet_residual, dimension, dimension_vandermonde, expansion_residual, haar_orthogonality_residual,
    CauchyBinetWeight, Representation,
};
use mimo_charexp::mcsim::{empirical_survival, estimate, ks_distance, sample_eigenvalues, Functional};
use mimo_charexp::mgfcap::{outage_curve, MgfEvaluator, OutageQuery};
use mimo_charexp::numkit::{
    asymptotic_problem, asymptotic_ratio, confluent_ratio, det, vandermonde, Cluster, ConfluentRatioProblem, Mat,
    NodeFn,
};
use mimo_charexp::specfun::QuadratureSettings;
use mimo_charexp::ustm::{received_density, received_density_mc, UstmConfig};
use mimo_charexp::{ComplexMatrix, C64};
use rand::Rng;

type R<T> = Result<T, Box<dyn Error>>;

/// A named criterion.
type Criterion = (&'static str, fn() -> R<Verdict>);

/// Verdict of one criterion: pass flag and a one-line summary.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> R<Verdict> {
    Ok(Verdict { pass, detail })
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn array(n: usize, d_lambda: f64) -> R<ComplexMatrix> {
    Ok(correlation_matrix(&ArrayGeometry::new(n, d_lambda, 10.0)?)?)
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| standard_complex_normal(rng))
}

/// Random positive-definite correlation matrix `AA†/n + I/5`.
fn random_correlation(n: usize, rng: &mut impl Rng) -> R<ComplexMatrix> {
    let a = gaussian(n, n, rng);
    let g = a.matmul(&a.adjoint())?.scale(&c(1.0 / n as f64));
    Ok(g.add(&ComplexMatrix::identity(n).scale(&c(0.2)))?)
}

/// Random specification of the given ensemble (0 iid, 1 semicorrelated,
/// 2 nonzero mean, 3 doubly correlated).
fn random_spec(kind: usize, nt: usize, nr: usize, rng: &mut impl Rng) -> R<ChannelSpec> {
    Ok(match kind {
        0 => ChannelSpec::iid(nt, nr)?,
        1 => ChannelSpec::semi_correlated(random_correlation(nt, rng)?, nr)?,
        2 => ChannelSpec::nonzero_mean(gaussian(nr, nt, rng).scale(&c(0.7)))?,
        _ => ChannelSpec::fully_correlated(random_correlation(nt, rng)?, random_correlation(nr, rng)?)?,
    })
}

fn describe(s: &ChannelSpec) -> String {
    format!("{} {}x{}", s.variant_name(), s.nt(), s.nr())
}

/// g(0) = 1 for 50 random specifications with nt, nr ≤ 6.
fn mgf_normalization() -> R<Verdict> {
    let mut rng = draw_rng(1, 0);
    let (mut worst, mut at) = (0.0f64, String::new());
    for k in 0..50 {
        let (nt, nr) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let spec = random_spec(k % 4, nt, nr, &mut rng)?;
        let g = MgfEvaluator::new(&spec)?.eval(c(0.0))?.value;
        let err = (g - c(1.0)).norm();
        if err >= worst {
            worst = err;
            at = describe(&spec);
        }
    }
    verdict(
        worst < 1e-8,
        format!("max |g(0) - 1| = {worst:.2e} ({at}) over 50 specs, limit 1e-8"),
    )
}

fn fixed_mean(nr: usize, nt: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(nr, nt, |i, j| {
        C64::new(0.5 + 0.3 * i as f64 - 0.2 * j as f64, 0.15 * (i as f64 - j as f64))
    })
}

/// Ergodic capacity against 1e5 Monte Carlo draws for every ensemble.
fn ergodic_vs_monte_carlo() -> R<Verdict> {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut at = String::new();
    for (nt, nr) in [(2, 2), (3, 4), (4, 3)] {
        let specs = [
            ChannelSpec::iid(nt, nr)?,
            ChannelSpec::semi_correlated(array(nt, 0.5)?, nr)?,
            ChannelSpec::nonzero_mean(fixed_mean(nr, nt))?,
            ChannelSpec::fully_correlated(array(nt, 0.7)?, array(nr, 1.0)?)?,
        ];
        for s in &specs {
            let analytic = MgfEvaluator::new(s)?.ergodic()?;
            let mc = estimate(s, Functional::MeanI, 100_000, 1000 + count)?;
            let z = (analytic - mc.mean).abs() / mc.stderr;
            if z >= worst {
                worst = z;
                at = describe(s);
            }
            count += 1;
        }
    }
    verdict(
        worst <= 4.0,
        format!("max |analytic - MC| = {worst:.2} stderr ({at}) over {count} configs, limit 4"),
    )
}

/// Doubly correlated → semicorrelated → i.i.d. as the correlations go to I.
fn confluence_chain() -> R<Verdict> {
    let t = array(3, 0.8)?;
    // R = I up to a perturbation far below the node-merging threshold.
    let r_near = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => c(1.0 + 1e-13),
        (1, 1) => c(1.0),
        _ => C64::new(0.0, if i < j { 1e-14 } else { -1e-14 }),
    });
    let pairs = [
        (
            ChannelSpec::fully_correlated(t.clone(), ComplexMatrix::identity(4))?,
            ChannelSpec::semi_correlated(t.clone(), 4)?,
        ),
        (
            ChannelSpec::fully_correlated(t.clone(), r_near)?,
            ChannelSpec::semi_correlated(t, 2)?,
        ),
        (
            ChannelSpec::semi_correlated(ComplexMatrix::identity(3), 2)?,
            ChannelSpec::iid(3, 2)?,
        ),
        (
            ChannelSpec::fully_correlated(ComplexMatrix::identity(2), ComplexMatrix::identity(3))?,
            ChannelSpec::iid(2, 3)?,
        ),
    ];
    let zs = [
        c(-0.45),
        c(-0.2),
        c(0.1),
        c(0.5),
        c(1.0),
        c(2.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -3.0),
        C64::new(0.3, 0.8),
        C64::new(-0.1, 5.0),
    ];
    let mut worst = 0.0f64;
    for (a, b) in &pairs {
        let (ea, eb) = (MgfEvaluator::new(a)?, MgfEvaluator::new(b)?);
        for &z in &zs {
            let (x, y) = (ea.eval(z)?.value, eb.eval(z)?.value);
            worst = worst.max((x - y).norm() / y.norm());
        }
    }
    verdict(
        worst < 1e-6,
        format!(
            "max relative gap = {worst:.2e} over {} links x {} z-points, limit 1e-6",
            pairs.len(),
            zs.len()
        ),
    )
}

/// Analytic ergodic capacity against a Richardson-extrapolated g'(0).
fn derivative_consistency() -> R<Verdict> {
    let specs = [
        ChannelSpec::iid(1, 1)?,
        ChannelSpec::iid(2, 3)?,
        ChannelSpec::iid(4, 2)?,
        ChannelSpec::semi_correlated(array(2, 0.5)?, 2)?,
        ChannelSpec::semi_correlated(array(3, 1.0)?, 5)?,
        ChannelSpec::semi_correlated(array(4, 0.7)?, 2)?,
        ChannelSpec::fully_correlated(array(2, 0.5)?, array(2, 1.0)?)?,
        ChannelSpec::fully_correlated(array(3, 0.8)?, array(4, 0.6)?)?,
        ChannelSpec::fully_correlated(array(4, 1.0)?, array(3, 0.5)?)?,
        ChannelSpec::fully_correlated(array(4, 1.5)?, array(4, 1.2)?)?,
    ];
    let mut worst = 0.0f64;
    for s in &specs {
        let ev = MgfEvaluator::new(s)?;
        let analytic = ev.ergodic()?;
        let g = |z: f64| -> R<f64> { Ok(ev.eval(c(z))?.value.re) };
        let d = |h: f64| -> R<f64> { Ok((g(h)? - g(-h)?) / (2.0 * h)) };
        let h = 1e-3;
        let fd = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
        worst = worst.max((analytic - fd).abs() / analytic.abs());
    }
    verdict(
        worst < 1e-5,
        format!("max relative gap = {worst:.2e} over {} specs, limit 1e-5", specs.len()),
    )
}

/// Outage inversion against the empirical survival function.
fn outage_vs_empirical() -> R<Verdict> {
    let grid: Vec<f64> = (0..=80).map(|k| 0.125 * k as f64).collect();
    let mut worst = 0.0f64;
    let mut at = String::new();
    for nr in [3, 4] {
        for d in [0.5, 1.0] {
            let spec = ChannelSpec::fully_correlated(array(4, d)?, array(nr, d)?)?;
            let analytic = outage_curve(&spec, &grid, &OutageQuery::new(0.0))?;
            if let Some(p) = analytic.iter().find(|p| !p.converged) {
                return verdict(
                    false,
                    format!("inversion did not converge at I_out = {} (nr={nr}, d={d})", p.i_out),
                );
            }
            let empirical = empirical_survival(&spec, &grid, 100_000, 77)?;
            for (a, e) in analytic.iter().zip(&empirical) {
                let gap = (a.exceedance - e.survival).abs();
                if gap >= worst {
                    worst = gap;
                    at = format!("nr={nr}, d={d}, I_out={}", a.i_out);
                }
            }
        }
    }
    verdict(
        worst < 0.01,
        format!("sup |P_out - empirical| = {worst:.4} ({at}), limit 0.01"),
    )
}

/// Piecewise-linear interpolation of a tabulated CDF (1 beyond the table).
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    match xs.iter().position(|&v| v >= x) {
        None => 1.0,
        Some(k) => {
            let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            ys[k - 1] + w * (ys[k] - ys[k - 1])
        }
    }
}

/// Unit mass and the largest-eigenvalue marginal against sampled spectra.
fn density_checks() -> R<Verdict> {
    let s = QuadratureSettings::default();
    let cases: Vec<(&str, JointDensity)> = vec![
        ("iid 1x3", density_iid(1, 3)?),
        ("iid 2x2", density_iid(2, 2)?),
        ("iid 3x2", density_iid(3, 2)?),
        (
            "semicorr 1x2",
            density_semicorrelated(&ComplexMatrix::identity(1).scale(&c(1.7)), 1, 2)?,
        ),
        ("semicorr 2x3", density_semicorrelated(&array(2, 0.5)?, 2, 3)?),
        ("semicorr 3x2", density_semicorrelated(&array(3, 1.0)?, 3, 2)?),
        ("rician 2x1", density_nonzero_mean(&fixed_mean(1, 2), 2, 1)?),
        ("rician 2x2", density_nonzero_mean(&fixed_mean(2, 2), 2, 2)?),
    ];
    let (mut worst_mass, mut worst_ks) = (0.0f64, 0.0f64);
    let (mut at_mass, mut at_ks) = ("", "");
    for (k, (name, d)) in cases.iter().enumerate() {
        let mass = (d.total_mass(&s)? - 1.0).abs();
        if mass >= worst_mass {
            worst_mass = mass;
            at_mass = name;
        }
        let samples = sample_eigenvalues(d.spec(), 100_000, 500 + k as u64)?;
        let maxima: Vec<f64> = samples.iter().map(|v| v.iter().copied().fold(0.0, f64::max)).collect();
        let top = maxima.iter().copied().fold(0.0, f64::max);
        let xs: Vec<f64> = (0..=400).map(|i| top * i as f64 / 400.0).collect();
        let ys = xs.iter().map(|&x| d.mass_below(x, &s)).collect::<Result<Vec<_>, _>>()?;
        let ks = ks_distance(&maxima, |x| interpolate(&xs, &ys, x));
        if ks >= worst_ks {
            worst_ks = ks;
            at_ks = name;
        }
    }
    verdict(
        worst_mass < 1e-5 && worst_ks < 0.02,
        format!(
            "max |mass - 1| = {worst_mass:.2e} ({at_mass}), limit 1e-5; max KS(lambda_max) = {worst_ks:.4} ({at_ks}), limit 0.02"
        ),
    )
}

/// Representation dimensions, character expansion, Cauchy–Binet, Haar.
fn group_suite() -> R<Verdict> {
    let mut mismatches = 0;
    let mut reps = 0;
    for m in 1..=4 {
        for rep in Representation::enumerate(m, 6) {
            reps += 1;
            if dimension(&rep)? != dimension_vandermonde(&rep)? {
                mismatches += 1;
            }
        }
    }
    let a = ComplexMatrix::from_fn(2, 2, |i, j| {
        C64::new(0.3 + 0.4 * i as f64 - 0.2 * j as f64, 0.1 * (i + j) as f64)
    });
    let expansion = expansion_residual(&a, c(0.1), 8)?;
    let mut cb = 0.0f64;
    for w in [
        CauchyBinetWeight::Exponential,
        CauchyBinetWeight::NegativeExponential,
        CauchyBinetWeight::Bessel,
    ] {
        cb = cb.max(cauchy_binet_residual(&[0.4, 1.0], &[0.8, 0.5], w, 25)?);
    }
    let rep = |m: &[usize]| Representation::new(m.to_vec());
    let pairs = [
        (rep(&[1, 0])?, rep(&[1, 0])?),
        (rep(&[1, 0])?, rep(&[2, 0])?),
        (rep(&[1, 1])?, rep(&[1, 1])?),
    ];
    let mut haar = 0.0f64;
    for (k, (x, y)) in pairs.iter().enumerate() {
        haar = haar.max(haar_orthogonality_residual(x, y, 100_000, 90 + k as u64)?.max_z);
    }
    verdict(
        mismatches == 0 && expansion < 1e-8 && cb < 1e-8 && haar <= 4.0,
        format!(
            "dimension mismatches {mismatches}/{reps}; expansion {expansion:.2e} and Cauchy-Binet {cb:.2e} (limit 1e-8); Haar max {haar:.2} stderr (limit 4)"
        ),
    )
}

/// Functions for the confluent-engine suite, with all derivatives.
#[derive(Clone, Copy)]
enum Family {
    /// `e^{a_i x}`.
    Exp,
    /// `(1 + x)^{a_i}`.
    Power,
}

impl Family {
    fn value(self, a: f64, x: f64, k: usize) -> f64 {
        match self {
            Family::Exp => a.powi(k as i32) * (a * x).exp(),
            Family::Power => (0..k).map(|j| a - j as f64).product::<f64>() * (1.0 + x).powf(a - k as f64),
        }
    }

    fn functions<'a>(self, a: &'a [f64]) -> Vec<NodeFn<'a, f64>> {
        a.iter()
            .map(move |&ai| Box::new(move |x: &f64, k: usize| Some(self.value(ai, *x, k))) as NodeFn<'a, f64>)
            .collect()
    }
}

/// `det[f_i(x_j)] / Δ(x)` at distinct nodes.
fn plain_ratio(f: Family, a: &[f64], x: &[f64]) -> R<f64> {
    let m = Mat::from_fn(a.len(), x.len(), |i, j| f.value(a[i], x[j], 0));
    Ok(det(&m)? / vandermonde(x))
}

/// Symmetric spread of every cluster by `h`; the ratio is even in `h`, so
/// one Richardson step cancels the `h²` term.
fn richardson_oracle(f: Family, a: &[f64], clusters: &[(f64, usize)]) -> R<f64> {
    let spread = |h: f64| -> Vec<f64> {
        clusters
            .iter()
            .flat_map(|&(x0, m)| (0..m).map(move |k| x0 + h * (k as f64 - (m as f64 - 1.0) / 2.0)))
            .collect()
    };
    let h = 1e-2;
    let (r1, r2) = (plain_ratio(f, a, &spread(h))?, plain_ratio(f, a, &spread(h / 2.0))?);
    Ok((4.0 * r2 - r1) / 3.0)
}

/// Confluent ratios against finite-difference oracles and the
/// infinite-node limit against direct evaluation at large nodes.
fn confluent_engine() -> R<Verdict> {
    let mut rng = draw_rng(8, 0);
    let patterns: [&[usize]; 10] = [
        &[2],
        &[3],
        &[2, 1],
        &[3, 1],
        &[1, 2, 1],
        &[2, 2],
        &[3, 2],
        &[1, 3, 1],
        &[3, 1, 1],
        &[2, 1, 2],
    ];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for family in [Family::Exp, Family::Power] {
        for pattern in patterns {
            let m: usize = pattern.iter().sum();
            let a: Vec<f64> = (0..m)
                .map(|i| 0.3 + 0.45 * i as f64 + rng.gen_range(-0.1..0.1))
                .collect();
            let clusters: Vec<(f64, usize)> = pattern
                .iter()
                .enumerate()
                .map(|(k, &mult)| (0.2 + 0.7 * k as f64 + rng.gen_range(-0.05..0.05), mult))
                .collect();
            let nodes = clusters.iter().map(|&(x, mult)| Cluster::new(x, mult)).collect();
            let got = confluent_ratio(&ConfluentRatioProblem::new(family.functions(&a), nodes)?)?;
            let oracle = richardson_oracle(family, &a, &clusters)?;
            worst = worst.max((got - oracle).abs() / oracle.abs());
            cases += 1;
        }
    }
    // f_i(x) = x^{M-1} Σ_k c_ik x^{-k} + d_i e^{-x}. The direct ratio at
    // large nodes s·(1, 2, …) approaches the limit as O(1/s); one Richardson
    // step in 1/s removes that term while s stays small enough for the
    // nearly dependent large-node columns to keep their precision.
    let mut worst_inf = 0.0f64;
    for (m, p_inf) in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)] {
        let coeff: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let decay: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |i: usize, x: f64| -> f64 {
            coeff[i]
                .iter()
                .enumerate()
                .map(|(k, ck)| ck * x.powi((m - 1 - k) as i32))
                .sum::<f64>()
                + decay[i] * (-x).exp()
        };
        let funcs: Vec<NodeFn<'_, f64>> = (0..m)
            .map(|i| Box::new(move |x: &f64, k: usize| (k == 0).then(|| f(i, *x))) as NodeFn<'_, f64>)
            .collect();
        let finite: Vec<f64> = (0..m - p_inf).map(|k| 0.4 + 0.9 * k as f64).collect();
        let problem = asymptotic_problem(funcs, finite.iter().map(|&x| Cluster::new(x, 1)).collect(), p_inf)?;
        let limit = asymptotic_ratio(&problem, &coeff, p_inf)?;
        let at_scale = |scale: f64| -> R<f64> {
            let mut x: Vec<f64> = (0..p_inf).map(|k| scale * (k + 1) as f64).collect();
            x.extend(&finite);
            Ok(det(&Mat::from_fn(m, m, |i, j| f(i, x[j])))? / vandermonde(&x))
        };
        let direct = 2.0 * at_scale(2e3)? - at_scale(1e3)?;
        worst_inf = worst_inf.max((limit - direct).abs() / direct.abs());
    }
    verdict(
        worst < 1e-6 && worst_inf < 1e-4,
        format!("confluent max relative error {worst:.2e} over {cases} cases (limit 1e-6); infinite-node limit {worst_inf:.2e} (limit 1e-4)"),
    )
}

/// The d_lambda sweep from the command-line tool: monotone doubly
/// correlated capacity that meets the semicorrelated one at wide spacing.
fn sweep_behaviour() -> R<Verdict> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("sweep.conf");
    std::fs::write(
        &cfg,
        "[channel]\nnt = 4\ndelta = 10\n\n[sweep]\nvariable = d_lambda\nstart = 0.1\nstop = 3\npoints = 30\nnr = 3, 4\n",
    )?;
    let out = Command::new(env!("CARGO_BIN_EXE_mimo-charexp"))
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .output()?;
    if !out.status.success() {
        return verdict(
            false,
            format!(
                "sweep exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr)
            ),
        );
    }
    let text = String::from_utf8(out.stdout)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty sweep output")?.split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(str::parse).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()?;
    let mut monotone = true;
    let mut worst_gap = 0.0f64;
    for nr in [3, 4] {
        let col = |tag: &str| {
            header
                .iter()
                .position(|h| *h == format!("{tag}_nr{nr}"))
                .ok_or("missing sweep column")
        };
        let (full, semi) = (col("fullcorr")?, col("semicorr")?);
        monotone &= rows.windows(2).all(|w| w[1][full] > w[0][full]);
        let last = rows.last().ok_or("empty sweep")?;
        worst_gap = worst_gap.max((last[full] - last[semi]).abs() / last[semi]);
    }
    verdict(
        rows.len() == 30 && monotone && worst_gap < 0.02,
        format!(
            "{} points, doubly correlated capacity increasing: {monotone}; gap to semicorrelated at d=3: {:.3}% (limit 2%)",
            rows.len(),
            100.0 * worst_gap
        ),
    )
}

/// Received-signal density against Haar Monte Carlo, and the noise limit.
fn ustm_checks() -> R<Verdict> {
    let (t_coh, nr) = (3, 2);
    let cfg = UstmConfig::new(t_coh, nr, array(2, 0.6)?.scale(&c(2.0)))?;
    let mut rng = draw_rng(10, 0);
    let mut worst_z = 0.0f64;
    for k in 0..5 {
        let y = gaussian(nr, t_coh, &mut rng).scale(&c(1.3));
        let exact = received_density(&cfg, &y)?;
        let mc = received_density_mc(&cfg, &y, 100_000, 200 + k)?;
        worst_z = worst_z.max((exact - mc.mean).abs() / mc.stderr);
    }
    let quiet = UstmConfig::new(t_coh, nr, ComplexMatrix::diag(&[c(1e-9), c(2e-9)]))?;
    let mut worst_limit = 0.0f64;
    for _ in 0..5 {
        let y = gaussian(nr, t_coh, &mut rng);
        let noise = (-y.norm_fro().powi(2)).exp() / std::f64::consts::PI.powi((t_coh * nr) as i32);
        worst_limit = worst_limit.max((received_density(&quiet, &y)? - noise).abs() / noise);
    }
    verdict(
        worst_z <= 4.0 && worst_limit < 1e-5,
        format!("max |exact - MC| = {worst_z:.2} stderr at 5 blocks (limit 4); T -> 0 relative gap {worst_limit:.2e} (limit 1e-5)"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("mgf normalization", mgf_normalization),
        ("ergodic capacity vs Monte Carlo", ergodic_vs_monte_carlo),
        ("confluence chain", confluence_chain),
        ("derivative consistency", derivative_consistency),
        ("outage vs empirical survival", outage_vs_empirical),
        ("eigenvalue densities", density_checks),
        ("group-theory identities", group_suite),
        ("confluent determinant engine", confluent_engine),
        ("d_lambda sweep", sweep_behaviour),
        ("unitary space-time density", ustm_checks),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} - {detail} [{:.1}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
