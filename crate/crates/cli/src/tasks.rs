//! Subcommand implementations. Each returns the CSV table it produces.

use mimo_charexp::channels::ChannelSpec;
use mimo_charexp::eigdens::density as joint_density;
use mimo_charexp::mcsim::{empirical_survival, estimate, Functional};
use mimo_charexp::mgfcap::{outage_curve, MgfEvaluator, OutageQuery};
use mimo_charexp::specfun::QuadratureSettings;
use mimo_charexp::ustm::{received_density_log, received_density_mc, UstmConfig};
use mimo_charexp::ComplexMatrix;
use rayon::prelude::*;

use crate::channel::{build_spec, snr_linear, transmit_correlation};
use crate::config::{linspace, ChannelConfig, RunConfig, SweepVariable, VariantKind};
use crate::matfile::read_matrix;
use crate::report::{Cell, Table};
use crate::CliError;

fn settings(cfg: &RunConfig) -> QuadratureSettings {
    QuadratureSettings::default().scaled(cfg.run.tol)
}

fn evaluator(cfg: &RunConfig, spec: &ChannelSpec) -> Result<MgfEvaluator, CliError> {
    Ok(MgfEvaluator::with_settings(spec, settings(cfg))?)
}

/// Seed of the `k`-th independent Monte Carlo run of one command.
fn sub_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// `mgf`: `g(z)` at every configured point.
pub fn mgf(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = build_spec(&cfg.channel)?;
    let ev = evaluator(cfg, &spec)?;
    let mut t = Table::new(&["z_re", "z_im", "g_re", "g_im", "method", "digits_lost"]);
    for &z in &cfg.mgf.z {
        let s = ev.eval(z)?;
        t.push(vec![
            z.re.into(),
            z.im.into(),
            s.value.re.into(),
            s.value.im.into(),
            s.method.tag().into(),
            s.digits_lost.into(),
        ]);
    }
    Ok(t)
}

/// `ergodic`: `E[I]`, optionally next to a Monte Carlo estimate.
pub fn ergodic(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = build_spec(&cfg.channel)?;
    let ev = evaluator(cfg, &spec)?;
    let scale = cfg.unit_scale();
    let value = ev.ergodic()? * scale;
    let mut cols = vec!["variant", "method", "ergodic_capacity", "units"];
    let mut row: Vec<Cell> = vec![
        spec.variant_name().into(),
        ev.method().tag().into(),
        value.into(),
        cfg.unit_name().into(),
    ];
    if cfg.ergodic.mc {
        let mc = estimate(&spec, Functional::MeanI, cfg.run.mc_n, cfg.run.seed)?;
        cols.extend(["mc_mean", "mc_stderr", "mc_n"]);
        row.extend([(mc.mean * scale).into(), (mc.stderr * scale).into(), mc.n.into()]);
    }
    let mut t = Table::new(&cols);
    t.push(row);
    Ok(t)
}

/// `outage`: the inversion on the threshold grid. The table is returned
/// even when some points did not converge; the second value then carries
/// the non-convergence error for the exit code.
pub fn outage(cfg: &RunConfig) -> Result<(Table, Result<(), CliError>), CliError> {
    let spec = build_spec(&cfg.channel)?;
    let scale = cfg.unit_scale();
    let grid_nats: Vec<f64> = cfg.outage.grid.iter().map(|x| x / scale).collect();
    let query = OutageQuery {
        max_frequency: cfg.outage.max_frequency,
        nodes: cfg.outage.nodes,
        ..OutageQuery::new(0.0)
    };
    let results = outage_curve(&spec, &grid_nats, &query)?;
    let empirical = if cfg.outage.empirical {
        Some(empirical_survival(&spec, &grid_nats, cfg.run.mc_n, cfg.run.seed)?)
    } else {
        None
    };
    let mut cols = vec!["i_out", "exceedance", "cdf", "error", "converged"];
    if empirical.is_some() {
        cols.extend(["empirical_exceedance", "empirical_stderr"]);
    }
    let mut t = Table::new(&cols);
    let mut failed = Vec::new();
    for (k, (r, &x)) in results.iter().zip(&cfg.outage.grid).enumerate() {
        if !r.converged {
            failed.push(x);
        }
        let mut row: Vec<Cell> = vec![
            x.into(),
            r.exceedance.into(),
            r.cdf.into(),
            r.error.into(),
            r.converged.into(),
        ];
        if let Some(e) = &empirical {
            row.extend([e[k].survival.into(), e[k].stderr.into()]);
        }
        t.push(row);
    }
    let outcome = if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "outage inversion did not converge at I_out = {failed:?}"
        )))
    };
    Ok((t, outcome))
}

/// `density`: the joint eigenvalue density on a grid over `[0, lambda_max]`
/// per axis (`N ≤ 2`).
pub fn density(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = build_spec(&cfg.channel)?;
    let d = joint_density(&spec)?;
    let axis = linspace(0.0, cfg.density.lambda_max, cfg.density.points);
    match d.dimension() {
        1 => {
            let mut t = Table::new(&["lambda", "density"]);
            for &l in &axis {
                t.push(vec![l.into(), d.evaluate(&[l])?.into()]);
            }
            Ok(t)
        }
        2 => {
            let rows: Vec<Vec<Cell>> = axis
                .par_iter()
                .map(|&a| {
                    axis.iter()
                        .map(|&b| Ok(vec![a.into(), b.into(), d.evaluate(&[a, b])?.into()]))
                        .collect::<Result<Vec<Vec<Cell>>, CliError>>()
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .flatten()
                .collect();
            let mut t = Table::new(&["lambda_1", "lambda_2", "density"]);
            for r in rows {
                t.push(r);
            }
            Ok(t)
        }
        n => Err(CliError::Config(format!(
            "density grids are written for min(nt, nr) ≤ 2, this channel has {n} eigenvalues"
        ))),
    }
}

fn functional_name(f: &Functional) -> String {
    match f {
        Functional::MeanI => "mean_i".into(),
        Functional::SecondMomentI => "second_moment".into(),
        Functional::MgfAt(z) => format!("mgf:{z}"),
        Functional::Exceedance(x) => format!("exceedance:{x}"),
    }
}

/// `simulate`: Monte Carlo estimates, each with its own seed stream.
pub fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = build_spec(&cfg.channel)?;
    let scale = cfg.unit_scale();
    let mut t = Table::new(&["functional", "n", "mean", "variance", "stderr", "units"]);
    for (k, f) in cfg.simulate.functionals.iter().enumerate() {
        // Thresholds are read in the reporting unit.
        let (query, factor, unit) = match *f {
            Functional::MeanI => (*f, scale, cfg.unit_name()),
            Functional::SecondMomentI => (*f, scale * scale, if cfg.run.bits { "bits^2" } else { "nats^2" }),
            Functional::MgfAt(_) => (*f, 1.0, "1"),
            Functional::Exceedance(x) => (Functional::Exceedance(x / scale), 1.0, "1"),
        };
        let e = estimate(&spec, query, cfg.run.mc_n, sub_seed(cfg.run.seed, k as u64))?;
        t.push(vec![
            functional_name(f).as_str().into(),
            e.n.into(),
            (e.mean * factor).into(),
            (e.variance * factor * factor).into(),
            (e.stderr * factor).into(),
            unit.into(),
        ]);
    }
    Ok(t)
}

/// `ustm`: `p(Y)` for the block in `[ustm] y_file`.
pub fn ustm(cfg: &RunConfig) -> Result<Table, CliError> {
    let c = &cfg.channel;
    let t = match c.variant {
        VariantKind::Iid => ComplexMatrix::identity(c.nt),
        VariantKind::SemiCorrelated => transmit_correlation(c)?,
        _ => {
            return Err(CliError::Config(
                "ustm needs [channel] variant = iid or semicorr (transmit correlation only)".into(),
            ))
        }
    };
    let rho = snr_linear(c.snr_db);
    let t = if rho == 1.0 {
        t
    } else {
        t.scale(&mimo_charexp::C64::new(rho, 0.0))
    };
    let ucfg = UstmConfig::new(cfg.ustm.t_coh, c.nr, t)?;
    let path = cfg
        .ustm
        .y_file
        .as_deref()
        .ok_or_else(|| CliError::Config("ustm needs [ustm] y_file".into()))?;
    let y = read_matrix(path)?;
    let log = received_density_log(&ucfg, &y)?;
    let mut cols = vec!["t_coh", "nt", "nr", "log_density", "density"];
    let mut row: Vec<Cell> = vec![
        ucfg.t_coh().into(),
        ucfg.nt().into(),
        ucfg.nr().into(),
        log.log_abs.into(),
        log.value().re.into(),
    ];
    if cfg.ustm.mc {
        let mc = received_density_mc(&ucfg, &y, cfg.run.mc_n, cfg.run.seed)?;
        cols.extend(["mc_mean", "mc_stderr", "mc_n"]);
        row.extend([mc.mean.into(), mc.stderr.into(), mc.n.into()]);
    }
    let mut table = Table::new(&cols);
    table.push(row);
    Ok(table)
}

/// The channel at one sweep point for one receive-antenna count.
fn sweep_channel(base: &ChannelConfig, var: SweepVariable, x: f64, nr: usize, variant: VariantKind) -> ChannelConfig {
    let mut c = base.clone();
    c.variant = variant;
    c.nr = nr;
    match var {
        SweepVariable::DLambda => c.d_lambda = x,
        SweepVariable::Delta => c.delta = x,
        SweepVariable::Snr => c.snr_db = x,
    }
    c
}

/// `sweep`: ergodic capacity of the doubly correlated and semicorrelated
/// ensembles at every sweep point, one column pair per receive count.
pub fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let s = &cfg.sweep;
    let xs = s.values();
    let scale = cfg.unit_scale();
    let kinds = [
        (VariantKind::FullyCorrelated, "fullcorr"),
        (VariantKind::SemiCorrelated, "semicorr"),
    ];
    let mut cols = vec![s.variable.name().to_string()];
    for &nr in &s.nr {
        for (_, tag) in kinds {
            cols.push(format!("{tag}_nr{nr}"));
        }
    }
    if s.mc {
        for &nr in &s.nr {
            for (_, tag) in kinds {
                cols.push(format!("mc_{tag}_nr{nr}"));
                cols.push(format!("mc_{tag}_nr{nr}_stderr"));
            }
        }
    }
    // Every (point, nr, variant) cell is independent; collect keeps order.
    let rows: Vec<Vec<Cell>> = xs
        .par_iter()
        .enumerate()
        .map(|(k, &x)| -> Result<Vec<Cell>, CliError> {
            let mut analytic = vec![Cell::from(x)];
            let mut mc_cells = Vec::new();
            for (j, &nr) in s.nr.iter().enumerate() {
                for (v, (kind, _)) in kinds.iter().enumerate() {
                    let spec = build_spec(&sweep_channel(&cfg.channel, s.variable, x, nr, *kind))?;
                    let value = evaluator(cfg, &spec)?.ergodic().map_err(|e| {
                        CliError::from(e).with_context(&format!("{} = {x}, nr = {nr}", s.variable.name()))
                    })?;
                    analytic.push((value * scale).into());
                    if s.mc {
                        let stream = ((k * s.nr.len() + j) * kinds.len() + v) as u64;
                        let e = estimate(&spec, Functional::MeanI, cfg.run.mc_n, sub_seed(cfg.run.seed, stream))?;
                        mc_cells.push((e.mean * scale).into());
                        mc_cells.push((e.stderr * scale).into());
                    }
                }
            }
            analytic.extend(mc_cells);
            Ok(analytic)
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&cols);
    for r in rows {
        t.push(r);
    }
    Ok(t)
}
