//! Run configuration: line-oriented `key = value` text with `[section]`
//! headers.
//!
//! ```text
//! # Capacity versus antenna spacing for a doubly correlated array
//! [channel]
//! variant = fullcorr
//! nt = 4
//! nr = 3
//! d_lambda = 0.5
//! delta = 10
//!
//! [sweep]
//! variable = d_lambda
//! start = 0.1
//! stop = 3
//! points = 30
//! nr = 3, 4
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Every key is
//! optional (documented defaults apply), but unknown sections, unknown keys
//! and duplicates are rejected so typos never pass silently. Relative file
//! paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mimo_charexp::mcsim::{Functional, MIN_SAMPLES};
use mimo_charexp::C64;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Largest antenna count accepted from a config.
pub const MAX_ANTENNAS: usize = 32;

const SECTIONS: &[&str] = &[
    "channel", "run", "mgf", "ergodic", "outage", "density", "simulate", "sweep", "ustm",
];

/// Parsed but untyped config text: section → key → (value, line number).
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl RawConfig {
    /// Parses config text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = Self::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line_no, format!("malformed section header `{line}`")))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(config_err(
                        line_no,
                        format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                    ));
                }
                out.sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            let section = current
                .as_ref()
                .ok_or_else(|| config_err(line_no, format!("key `{key}` appears before any [section]")))?;
            if key.is_empty() {
                return Err(config_err(line_no, "empty key".into()));
            }
            let map = out.sections.get_mut(section).expect("section registered at header");
            if map.insert(key.clone(), (value, line_no)).is_some() {
                return Err(config_err(line_no, format!("duplicate key `{key}` in [{section}]")));
            }
        }
        Ok(out)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.sections.get_mut(section)?.remove(key)
    }

    fn leftovers(&self) -> Vec<String> {
        self.sections
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(k, (_, line))| format!("[{s}] {k} (line {line})")))
            .collect()
    }
}

fn config_err(line: usize, msg: String) -> CliError {
    CliError::Config(format!("line {line}: {msg}"))
}

/// Typed reader over a [`RawConfig`] that consumes keys as they are read.
struct Reader {
    raw: RawConfig,
    base_dir: PathBuf,
}

impl Reader {
    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T, CliError> {
        match self.raw.take(section, key) {
            None => Ok(default),
            Some((v, line)) => {
                parse(&v).ok_or_else(|| config_err(line, format!("[{section}] {key}: cannot parse `{v}`")))
            }
        }
    }

    fn f64(&mut self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        self.get(section, key, default, parse_f64)
    }

    fn opt_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.get(section, key, None, |s| parse_f64(s).map(Some))
    }

    fn usize(&mut self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        self.get(section, key, default, |s| s.parse().ok())
    }

    fn u64(&mut self, section: &str, key: &str, default: u64) -> Result<u64, CliError> {
        self.get(section, key, default, |s| s.parse().ok())
    }

    fn bool(&mut self, section: &str, key: &str, default: bool) -> Result<bool, CliError> {
        self.get(section, key, default, parse_bool)
    }

    fn path(&mut self, section: &str, key: &str) -> Result<Option<PathBuf>, CliError> {
        let dir = self.base_dir.clone();
        self.get(section, key, None, |s| (!s.is_empty()).then(|| dir.join(s)).map(Some))
    }

    fn list<T>(
        &mut self,
        section: &str,
        key: &str,
        default: Vec<T>,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Vec<T>, CliError> {
        self.get(section, key, default, |s| {
            s.split(',').map(|item| parse(item.trim())).collect::<Option<Vec<T>>>()
        })
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Parses `a`, `a+bi`, `a-bi` or `bi` into a complex number.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim().replace(' ', "");
    let Some(body) = s.strip_suffix('i') else {
        return parse_f64(&s).map(|re| C64::new(re, 0.0));
    };
    // Split at the last sign that is not the leading one or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_f64(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => parse_f64(v)?,
    };
    Some(C64::new(re, im))
}

fn parse_functional(s: &str) -> Option<Functional> {
    let s = s.to_ascii_lowercase();
    match s.split_once(':') {
        None => match s.as_str() {
            "mean_i" => Some(Functional::MeanI),
            "second_moment" => Some(Functional::SecondMomentI),
            _ => None,
        },
        Some(("mgf", v)) => parse_f64(v).map(Functional::MgfAt),
        Some(("exceedance", v)) => parse_f64(v).map(Functional::Exceedance),
        _ => None,
    }
}

/// Channel ensemble selected in `[channel] variant`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    /// i.i.d. Rayleigh.
    Iid,
    /// Transmit-correlated Rayleigh.
    SemiCorrelated,
    /// Nonzero mean (Rician).
    Rician,
    /// Kronecker (doubly) correlated Rayleigh.
    FullyCorrelated,
}

impl VariantKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "iid" => Some(Self::Iid),
            "semicorr" | "semicorrelated" => Some(Self::SemiCorrelated),
            "rician" | "nonzero_mean" => Some(Self::Rician),
            "fullcorr" | "fully_correlated" => Some(Self::FullyCorrelated),
            _ => None,
        }
    }
}

/// `[channel]`: ensemble and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    /// `variant` (default `iid`).
    pub variant: VariantKind,
    /// `nt` transmit antennas (default 2).
    pub nt: usize,
    /// `nr` receive antennas (default 2).
    pub nr: usize,
    /// `d_lambda` antenna spacing in wavelengths (default 0.5).
    pub d_lambda: f64,
    /// `delta` angle spread in degrees (default 10).
    pub delta: f64,
    /// `correlate_tx`: build `T` from the array model (default true);
    /// otherwise `T = I`.
    pub correlate_tx: bool,
    /// `correlate_rx`: build `R` from the array model (default true).
    pub correlate_rx: bool,
    /// `snr_db` per-transmit-antenna SNR (default 0 dB).
    pub snr_db: f64,
    /// `t_file`: explicit `T` (overrides the array model).
    pub t_file: Option<PathBuf>,
    /// `r_file`: explicit `R`.
    pub r_file: Option<PathBuf>,
    /// `g0_file`: channel mean for `rician`.
    pub g0_file: Option<PathBuf>,
}

/// `[run]` plus the shared command-line flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    /// `seed` (default 0).
    pub seed: u64,
    /// `mc_n` Monte Carlo sample count (default 10⁴).
    pub mc_n: u64,
    /// `tol` multiplier on validation and quadrature tolerances (default 1).
    pub tol: f64,
    /// `bits`: report capacities in bits instead of nats (default false).
    pub bits: bool,
}

/// `[mgf]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MgfConfig {
    /// `z` list, each `a`, `a+bi` or `bi` (default `0.5, 1`).
    pub z: Vec<C64>,
}

/// `[ergodic]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicConfig {
    /// `mc`: add a Monte Carlo column (default false).
    pub mc: bool,
}

/// `[outage]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageConfig {
    /// Thresholds: `grid` list, or `i_min`, `i_max`, `points`
    /// (default 0 to 8 in 33 points).
    pub grid: Vec<f64>,
    /// `nodes` Gauss–Legendre nodes per frequency panel (default 20).
    pub nodes: usize,
    /// `max_frequency` cap on the inversion integral (default none).
    pub max_frequency: Option<f64>,
    /// `empirical`: add Monte Carlo survival columns (default false).
    pub empirical: bool,
}

/// `[density]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityConfig {
    /// `lambda_max` grid end (default 10).
    pub lambda_max: f64,
    /// `points` per axis (default 41).
    pub points: usize,
}

/// `[simulate]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulateConfig {
    /// `functionals` list: `mean_i`, `second_moment`, `mgf:<z>`,
    /// `exceedance:<I_out>` (default `mean_i, second_moment`).
    pub functionals: Vec<Functional>,
}

/// Quantity swept by `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    /// Antenna spacing in wavelengths.
    DLambda,
    /// Angle spread in degrees.
    Delta,
    /// SNR in dB.
    Snr,
}

impl SweepVariable {
    /// Column name.
    pub fn name(self) -> &'static str {
        match self {
            Self::DLambda => "d_lambda",
            Self::Delta => "delta",
            Self::Snr => "snr_db",
        }
    }
}

/// `[sweep]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// `variable`: `d_lambda` (default), `delta` or `snr`.
    pub variable: SweepVariable,
    /// `start` (default 0.1).
    pub start: f64,
    /// `stop` (default 3).
    pub stop: f64,
    /// `points` (default 30).
    pub points: usize,
    /// `nr` receive-antenna list, one curve pair per entry (default the
    /// channel's `nr`).
    pub nr: Vec<usize>,
    /// `mc`: add Monte Carlo columns with standard errors (default false).
    pub mc: bool,
}

impl SweepConfig {
    /// Sweep abscissae, evenly spaced from `start` to `stop`.
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

/// `[ustm]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UstmSection {
    /// `t_coh` coherence length (default 3).
    pub t_coh: usize,
    /// `y_file`: received block `Y` (`t_coh × nr`).
    pub y_file: Option<PathBuf>,
    /// `mc`: add a Haar Monte Carlo column (default false).
    pub mc: bool,
}

/// Complete, validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `[channel]`.
    pub channel: ChannelConfig,
    /// `[run]` and flags.
    pub run: RunSettings,
    /// `[mgf]`.
    pub mgf: MgfConfig,
    /// `[ergodic]`.
    pub ergodic: ErgodicConfig,
    /// `[outage]`.
    pub outage: OutageConfig,
    /// `[density]`.
    pub density: DensityConfig,
    /// `[simulate]`.
    pub simulate: SimulateConfig,
    /// `[sweep]`.
    pub sweep: SweepConfig,
    /// `[ustm]`.
    pub ustm: UstmSection,
}

/// Command-line overrides of `[run]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    /// `--seed`.
    pub seed: Option<u64>,
    /// `--mc-n`.
    pub mc_n: Option<u64>,
    /// `--tol`.
    pub tol: Option<f64>,
    /// `--bits`.
    pub bits: bool,
}

impl RunConfig {
    /// Loads `path` (or the defaults when `None`) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let (text, dir) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?,
                p.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (String::new(), PathBuf::new()),
        };
        Self::from_text(&text, &dir, overrides)
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn from_text(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let mut r = Reader {
            raw: RawConfig::parse(text)?,
            base_dir: base_dir.to_path_buf(),
        };
        let variant = r.get("channel", "variant", VariantKind::Iid, |s| {
            VariantKind::parse(&s.to_ascii_lowercase())
        })?;
        let channel = ChannelConfig {
            variant,
            nt: r.usize("channel", "nt", 2)?,
            nr: r.usize("channel", "nr", 2)?,
            d_lambda: r.f64("channel", "d_lambda", 0.5)?,
            delta: r.f64("channel", "delta", 10.0)?,
            correlate_tx: r.bool("channel", "correlate_tx", true)?,
            correlate_rx: r.bool("channel", "correlate_rx", true)?,
            snr_db: r.f64("channel", "snr_db", 0.0)?,
            t_file: r.path("channel", "t_file")?,
            r_file: r.path("channel", "r_file")?,
            g0_file: r.path("channel", "g0_file")?,
        };
        let run = RunSettings {
            seed: r.u64("run", "seed", 0)?,
            mc_n: r.u64("run", "mc_n", 10_000)?,
            tol: r.f64("run", "tol", 1.0)?,
            bits: r.bool("run", "bits", false)?,
        };
        let mgf = MgfConfig {
            z: r.list("mgf", "z", vec![C64::new(0.5, 0.0), C64::new(1.0, 0.0)], parse_complex)?,
        };
        let ergodic = ErgodicConfig {
            mc: r.bool("ergodic", "mc", false)?,
        };
        let explicit_grid = r.list("outage", "grid", Vec::new(), parse_f64)?;
        let (i_min, i_max, points) = (
            r.f64("outage", "i_min", 0.0)?,
            r.f64("outage", "i_max", 8.0)?,
            r.usize("outage", "points", 33)?,
        );
        let grid = if explicit_grid.is_empty() {
            linspace(i_min, i_max, points)
        } else {
            explicit_grid
        };
        let outage = OutageConfig {
            grid,
            nodes: r.usize("outage", "nodes", 20)?,
            max_frequency: r.opt_f64("outage", "max_frequency")?,
            empirical: r.bool("outage", "empirical", false)?,
        };
        let density = DensityConfig {
            lambda_max: r.f64("density", "lambda_max", 10.0)?,
            points: r.usize("density", "points", 41)?,
        };
        let simulate = SimulateConfig {
            functionals: r.list(
                "simulate",
                "functionals",
                vec![Functional::MeanI, Functional::SecondMomentI],
                parse_functional,
            )?,
        };
        let sweep = SweepConfig {
            variable: r.get("sweep", "variable", SweepVariable::DLambda, |s| {
                match s.to_ascii_lowercase().as_str() {
                    "d_lambda" => Some(SweepVariable::DLambda),
                    "delta" => Some(SweepVariable::Delta),
                    "snr" | "snr_db" => Some(SweepVariable::Snr),
                    _ => None,
                }
            })?,
            start: r.f64("sweep", "start", 0.1)?,
            stop: r.f64("sweep", "stop", 3.0)?,
            points: r.usize("sweep", "points", 30)?,
            nr: r.list("sweep", "nr", vec![channel.nr], |s| s.parse().ok())?,
            mc: r.bool("sweep", "mc", false)?,
        };
        let ustm = UstmSection {
            t_coh: r.usize("ustm", "t_coh", 3)?,
            y_file: r.path("ustm", "y_file")?,
            mc: r.bool("ustm", "mc", false)?,
        };
        let leftovers = r.raw.leftovers();
        if !leftovers.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", leftovers.join(", "))));
        }
        let mut cfg = Self {
            channel,
            run,
            mgf,
            ergodic,
            outage,
            density,
            simulate,
            sweep,
            ustm,
        };
        cfg.run.seed = overrides.seed.unwrap_or(cfg.run.seed);
        cfg.run.mc_n = overrides.mc_n.unwrap_or(cfg.run.mc_n);
        cfg.run.tol = overrides.tol.unwrap_or(cfg.run.tol);
        cfg.run.bits |= overrides.bits;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that do not need the files.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let c = &self.channel;
        for (name, n) in [("nt", c.nt), ("nr", c.nr)] {
            if n == 0 || n > MAX_ANTENNAS {
                return bad(format!("[channel] {name} = {n} outside 1..={MAX_ANTENNAS}"));
            }
        }
        if c.d_lambda < 0.0 {
            return bad(format!("[channel] d_lambda = {} must be ≥ 0", c.d_lambda));
        }
        if c.delta <= 0.0 {
            return bad(format!("[channel] delta = {} must be > 0", c.delta));
        }
        if !(self.run.tol > 0.0 && self.run.tol.is_finite()) {
            return bad(format!("tolerance multiplier {} must be positive", self.run.tol));
        }
        if self.run.mc_n < MIN_SAMPLES {
            return bad(format!(
                "mc_n = {} is below the minimum of {MIN_SAMPLES}",
                self.run.mc_n
            ));
        }
        if self.mgf.z.is_empty() {
            return bad("[mgf] z list is empty".into());
        }
        let o = &self.outage;
        if o.grid.is_empty() || o.grid.iter().any(|&x| x < 0.0) {
            return bad("[outage] thresholds must form a nonempty list of values ≥ 0".into());
        }
        if o.nodes < 2 {
            return bad("[outage] nodes must be ≥ 2".into());
        }
        if matches!(o.max_frequency, Some(f) if f <= 0.0) {
            return bad("[outage] max_frequency must be positive".into());
        }
        let d = &self.density;
        if d.lambda_max <= 0.0 || d.points < 2 {
            return bad("[density] needs lambda_max > 0 and points ≥ 2".into());
        }
        if self.simulate.functionals.is_empty() {
            return bad("[simulate] functionals list is empty".into());
        }
        let s = &self.sweep;
        if s.points == 0 {
            return bad("[sweep] points must be ≥ 1".into());
        }
        if s.stop < s.start || (s.points > 1 && s.stop == s.start) {
            return bad(format!("[sweep] range [{}, {}] is empty or reversed", s.start, s.stop));
        }
        let positive = matches!(s.variable, SweepVariable::DLambda | SweepVariable::Delta);
        if positive && s.start <= 0.0 {
            return bad(format!(
                "[sweep] {} range must be positive, starts at {}",
                s.variable.name(),
                s.start
            ));
        }
        if s.nr.is_empty() || s.nr.iter().any(|&n| n == 0 || n > MAX_ANTENNAS) {
            return bad(format!("[sweep] nr entries must lie in 1..={MAX_ANTENNAS}"));
        }
        if self.ustm.t_coh == 0 {
            return bad("[ustm] t_coh must be ≥ 1".into());
        }
        Ok(())
    }

    /// Files the configuration refers to, in a fixed order.
    pub fn referenced_files(&self) -> Vec<&Path> {
        [
            &self.channel.t_file,
            &self.channel.r_file,
            &self.channel.g0_file,
            &self.ustm.y_file,
        ]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect()
    }

    /// SHA-256 over the effective configuration (every field except the
    /// seed, which is recorded separately) and the bytes of every referenced
    /// file, as lowercase hex.
    pub fn hash(&self) -> Result<String, CliError> {
        let mut canonical = self.clone();
        canonical.run.seed = 0;
        let mut h = Sha256::new();
        h.update(format!("{canonical:?}").as_bytes());
        for p in self.referenced_files() {
            let bytes = std::fs::read(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            h.update(Sha256::digest(&bytes));
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Capacity scale factor: 1 for nats, `1/ln 2` for bits.
    pub fn unit_scale(&self) -> f64 {
        if self.run.bits {
            std::f64::consts::LOG2_E
        } else {
            1.0
        }
    }

    /// Unit name for reports.
    pub fn unit_name(&self) -> &'static str {
        if self.run.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

/// `points` evenly spaced values from `a` to `b` (inclusive).
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..points)
            .map(|k| {
                let v = a + (b - a) * k as f64 / (points - 1) as f64;
                // Snap to 12 significant digits so round grids print as
                // round decimals (0.9, not 0.8999999999999999).
                format!("{v:.11e}").parse().unwrap_or(v)
            })
            .collect(),
    }
}
