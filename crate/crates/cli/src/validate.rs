//! The validation suite behind `validate`.
//!
//! Each check computes one residual against an independent oracle or an
//! exact identity and compares it with a tolerance. `--tol` multiplies every
//! tolerance, `--mc-n` sets the Monte Carlo sample counts and `--seed` the
//! streams. The report has one row per check:
//! `check,residual,tolerance,margin,status` with `margin = tolerance −
//! residual`; a check whose computation fails reports an infinite residual.

use mimo_charexp::channels::{
    correlation_matrix, draw_rng, inv_eigs, standard_complex_normal, ArrayGeometry, ChannelSpec,
};
use mimo_charexp::eigdens::{density_nonzero_mean, density_semicorrelated, JointDensity};
use mimo_charexp::groupcheck::{
    cauchy_binet_residual, dimension, dimension_vandermonde, expansion_residual, haar_orthogonality_residual,
    CauchyBinetWeight, Representation,
};
use mimo_charexp::mcsim::{estimate, Functional};
use mimo_charexp::mgfcap::{outage_curve, MgfEvaluator, OutageQuery};
use mimo_charexp::numkit::hermitian_eigenvalues;
use mimo_charexp::specfun::QuadratureSettings;
use mimo_charexp::ustm::{received_density, UstmConfig};
use mimo_charexp::{ComplexMatrix, C64};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::Table;
use crate::{CliError, Fault};

/// One validation result.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    /// Stable check identifier.
    pub name: &'static str,
    /// Measured residual (`inf` if the computation failed).
    pub residual: f64,
    /// Tolerance after the `--tol` multiplier.
    pub tolerance: f64,
    /// Failure message of the computation, if any.
    pub error: Option<String>,
}

impl Check {
    /// `tolerance − residual`.
    pub fn margin(&self) -> f64 {
        self.tolerance - self.residual
    }

    /// Whether the residual is within tolerance.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.residual <= self.tolerance
    }
}

/// All checks of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// Results in suite order.
    pub checks: Vec<Check>,
}

impl Report {
    /// The CSV table.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "residual", "tolerance", "margin", "status"]);
        for c in &self.checks {
            t.push(vec![
                c.name.into(),
                c.residual.into(),
                c.tolerance.into(),
                c.margin().into(),
                (if c.passed() { "PASS" } else { "FAIL" }).into(),
            ]);
        }
        t
    }

    /// `Ok` iff every check passed.
    pub fn outcome(&self) -> Result<(), CliError> {
        for c in self.checks.iter().filter(|c| !c.passed()) {
            if let Some(e) = &c.error {
                eprintln!("check {} failed to evaluate: {e}", c.name);
            }
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        if failed == 0 {
            Ok(())
        } else {
            Err(CliError::ValidationFailed {
                failed,
                total: self.checks.len(),
            })
        }
    }
}

type Residual = Result<f64, CliError>;

/// A check definition: name, base tolerance and the residual computation.
struct Definition {
    name: &'static str,
    tolerance: f64,
    run: Box<dyn Fn(&Context) -> Residual + Sync>,
}

/// Inputs shared by the checks.
struct Context {
    mc_n: u64,
    seed: u64,
    fault: Option<Fault>,
}

impl Context {
    fn density(&self, d: JointDensity) -> JointDensity {
        match self.fault {
            Some(Fault::DensitySign) => d.with_flipped_sign(),
            None => d,
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn diag(v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::diag(&v.iter().map(|&x| c(x)).collect::<Vec<_>>())
}

fn array(n: usize, d_lambda: f64) -> Result<ComplexMatrix, CliError> {
    Ok(correlation_matrix(&ArrayGeometry::new(n, d_lambda, 10.0)?)?)
}

fn mean_matrix() -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 2, |i, j| {
        C64::new(0.4 * (i + 1) as f64 - 0.3 * j as f64, 0.2 * (i as f64 - j as f64))
    })
}

/// Specs spanning all four ensembles.
fn spec_family() -> Result<Vec<ChannelSpec>, CliError> {
    Ok(vec![
        ChannelSpec::iid(2, 3)?,
        ChannelSpec::iid(3, 2)?,
        ChannelSpec::semi_correlated(array(3, 0.5)?, 2)?,
        ChannelSpec::semi_correlated(diag(&[0.5, 2.0]), 4)?,
        ChannelSpec::nonzero_mean(mean_matrix())?,
        ChannelSpec::fully_correlated(array(3, 1.0)?, array(3, 0.7)?)?,
        ChannelSpec::fully_correlated(array(2, 0.5)?, array(4, 1.0)?)?,
    ])
}

fn relative(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn mgf_normalization(_: &Context) -> Residual {
    let mut worst: f64 = 0.0;
    for s in spec_family()? {
        let g = MgfEvaluator::new(&s)?.eval(c(0.0))?.value;
        worst = worst.max((g - c(1.0)).norm());
    }
    Ok(worst)
}

fn confluence_chain(_: &Context) -> Residual {
    let t = array(3, 1.0)?;
    let full = MgfEvaluator::new(&ChannelSpec::fully_correlated(t.clone(), ComplexMatrix::identity(3))?)?;
    let semi = MgfEvaluator::new(&ChannelSpec::semi_correlated(t, 3)?)?;
    let full_iid = MgfEvaluator::new(&ChannelSpec::fully_correlated(
        ComplexMatrix::identity(2),
        ComplexMatrix::identity(3),
    )?)?;
    let iid = MgfEvaluator::new(&ChannelSpec::iid(2, 3)?)?;
    let mut worst: f64 = 0.0;
    for z in [c(-0.4), c(0.3), c(0.7), c(1.5), C64::new(0.2, 1.0)] {
        worst = worst.max(relative(full.eval(z)?.value, semi.eval(z)?.value));
        worst = worst.max(relative(full_iid.eval(z)?.value, iid.eval(z)?.value));
    }
    Ok(worst)
}

fn derivative_consistency(_: &Context) -> Residual {
    let specs = [
        ChannelSpec::iid(2, 2)?,
        ChannelSpec::semi_correlated(array(3, 0.5)?, 2)?,
        ChannelSpec::fully_correlated(array(2, 0.5)?, array(3, 1.0)?)?,
    ];
    let mut worst: f64 = 0.0;
    for s in &specs {
        let ev = MgfEvaluator::new(s)?;
        let analytic = ev.ergodic()?;
        let g = |z: f64| -> Result<f64, CliError> { Ok(ev.eval(c(z))?.value.re) };
        let d = |h: f64| -> Result<f64, CliError> { Ok((g(h)? - g(-h)?) / (2.0 * h)) };
        let h = 1e-3;
        let fd = (4.0 * d(h / 2.0)? - d(h)?) / 3.0;
        worst = worst.max((analytic - fd).abs() / analytic.abs());
    }
    Ok(worst)
}

fn densities(ctx: &Context) -> Result<Vec<JointDensity>, CliError> {
    Ok(vec![
        ctx.density(density_semicorrelated(&diag(&[1.0, 2.0]), 2, 3)?),
        ctx.density(density_nonzero_mean(
            &ComplexMatrix::from_fn(2, 2, |i, j| c(if i == j { 0.8 } else { 0.3 })),
            2,
            2,
        )?),
    ])
}

fn density_mass(ctx: &Context) -> Residual {
    let s = QuadratureSettings::default();
    let mut worst: f64 = 0.0;
    for d in densities(ctx)? {
        worst = worst.max((d.total_mass(&s)? - 1.0).abs());
    }
    Ok(worst)
}

/// Largest negative density value relative to the largest positive one.
fn density_nonnegative(ctx: &Context) -> Residual {
    let mut worst: f64 = 0.0;
    for d in densities(ctx)? {
        let axis: Vec<f64> = (1..=12).map(|k| 0.5 * k as f64 - 0.23).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &a in &axis {
            for &b in &axis {
                let v = d.evaluate(&[a, b])?;
                lo = lo.min(v);
                hi = hi.max(v.abs());
            }
        }
        worst = worst.max((-lo).max(0.0) / hi.max(1e-300));
    }
    Ok(worst)
}

fn group_dimension(_: &Context) -> Residual {
    let mut mismatches = 0u32;
    for m in 1..=4 {
        for rep in Representation::enumerate(m, 6) {
            if dimension(&rep)? != dimension_vandermonde(&rep)? {
                mismatches += 1;
            }
        }
    }
    Ok(f64::from(mismatches))
}

fn character_expansion(_: &Context) -> Residual {
    let a = ComplexMatrix::from_fn(2, 2, |i, j| {
        C64::new(0.3 + 0.4 * i as f64 - 0.2 * j as f64, 0.1 * (i + j) as f64)
    });
    Ok(expansion_residual(&a, c(0.1), 8)?)
}

fn cauchy_binet(_: &Context) -> Residual {
    let mut worst: f64 = 0.0;
    for w in [
        CauchyBinetWeight::Exponential,
        CauchyBinetWeight::NegativeExponential,
        CauchyBinetWeight::Bessel,
    ] {
        worst = worst.max(cauchy_binet_residual(&[0.4, 1.0], &[0.8, 0.5], w, 25)?);
    }
    Ok(worst)
}

/// Largest orthogonality residual in units of its standard error.
fn haar_orthogonality(ctx: &Context) -> Residual {
    let rep = |m: &[usize]| Representation::new(m.to_vec());
    let pairs = [
        (rep(&[1, 0])?, rep(&[1, 0])?),
        (rep(&[1, 0])?, rep(&[2, 0])?),
        (rep(&[1, 1])?, rep(&[1, 1])?),
    ];
    let samples = ctx.mc_n as usize;
    let mut worst: f64 = 0.0;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let r = haar_orthogonality_residual(a, b, samples, ctx.seed.wrapping_add(k as u64))?;
        worst = worst.max(r.max_z);
    }
    Ok(worst)
}

fn outage_at_zero(_: &Context) -> Residual {
    let spec = ChannelSpec::iid(2, 2)?;
    let r = outage_curve(&spec, &[0.0, 1.5], &OutageQuery::new(0.0))?;
    let mut worst = (r[0].exceedance - 1.0).abs();
    for p in &r {
        if !p.converged {
            return Err(CliError::NonConvergence(format!("outage at {}", p.i_out)));
        }
        worst = worst.max((p.exceedance + p.cdf - 1.0).abs());
    }
    Ok(worst)
}

/// |analytic − MC| in units of the MC standard error.
fn mc_ergodic(ctx: &Context) -> Residual {
    let specs = [
        ChannelSpec::semi_correlated(array(3, 0.5)?, 2)?,
        ChannelSpec::nonzero_mean(mean_matrix())?,
        ChannelSpec::fully_correlated(array(3, 1.0)?, array(3, 0.7)?)?,
    ];
    let mut worst: f64 = 0.0;
    for (k, s) in specs.iter().enumerate() {
        let analytic = MgfEvaluator::new(s)?.ergodic()?;
        let mc = estimate(s, Functional::MeanI, ctx.mc_n, ctx.seed.wrapping_add(100 + k as u64))?;
        worst = worst.max((analytic - mc.mean).abs() / mc.stderr);
    }
    Ok(worst)
}

/// `p(Y)` at vanishing transmit power against the Gaussian noise density.
fn ustm_noise_limit(ctx: &Context) -> Residual {
    let (t_coh, nr) = (3, 2);
    let cfg = UstmConfig::new(t_coh, nr, diag(&[1e-9, 2e-9]))?;
    let mut rng = draw_rng(ctx.seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let y = ComplexMatrix::from_fn(nr, t_coh, |_, _| standard_complex_normal(&mut rng));
        let norm2 = y.norm_fro().powi(2);
        let noise = (-norm2).exp() / std::f64::consts::PI.powi((t_coh * nr) as i32);
        worst = worst.max((received_density(&cfg, &y)? - noise).abs() / noise);
    }
    Ok(worst)
}

/// `∏ t_i · det T = 1` for the array model.
fn inverse_spectrum(_: &Context) -> Residual {
    let t = array(4, 0.5)?;
    let det: f64 = hermitian_eigenvalues(&t)?.values().iter().product();
    let spec = ChannelSpec::semi_correlated(t, 2)?;
    let (ts, _) = inv_eigs(&spec)?;
    let prod: f64 = ts.values().iter().product();
    Ok((prod * det - 1.0).abs())
}

fn suite() -> Vec<Definition> {
    fn def(name: &'static str, tolerance: f64, run: fn(&Context) -> Residual) -> Definition {
        Definition {
            name,
            tolerance,
            run: Box::new(run),
        }
    }
    vec![
        def("mgf_normalization", 1e-8, mgf_normalization),
        def("confluence_chain", 1e-6, confluence_chain),
        def("derivative_consistency", 1e-5, derivative_consistency),
        def("density_mass", 1e-5, density_mass),
        def("density_nonnegative", 1e-12, density_nonnegative),
        def("group_dimension", 0.0, group_dimension),
        def("character_expansion", 1e-8, character_expansion),
        def("cauchy_binet", 1e-8, cauchy_binet),
        def("haar_orthogonality_z", 4.0, haar_orthogonality),
        def("outage_at_zero", 1e-6, outage_at_zero),
        def("mc_ergodic_z", 4.0, mc_ergodic),
        def("ustm_noise_limit", 1e-5, ustm_noise_limit),
        def("inverse_spectrum", 1e-8, inverse_spectrum),
    ]
}

/// Runs every check (in parallel; the report keeps suite order).
pub fn run_suite(cfg: &RunConfig, fault: Option<Fault>) -> Report {
    let ctx = Context {
        mc_n: cfg.run.mc_n,
        seed: cfg.run.seed,
        fault,
    };
    let checks = suite()
        .par_iter()
        .map(|d| {
            let tolerance = d.tolerance * cfg.run.tol;
            match (d.run)(&ctx) {
                Ok(residual) => Check {
                    name: d.name,
                    residual,
                    tolerance,
                    error: None,
                },
                Err(e) => Check {
                    name: d.name,
                    residual: f64::INFINITY,
                    tolerance,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Report { checks }
}

/// Names of the checks, in report order.
pub fn check_names() -> Vec<&'static str> {
    suite().iter().map(|d| d.name).collect()
}
