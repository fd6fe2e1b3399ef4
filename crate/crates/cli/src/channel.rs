//! Channel construction from the `[channel]` section.
//!
//! Correlation matrices come from a matrix file when one is given, else from
//! the uniform-linear-array model (`d_lambda`, `delta`) when the side is
//! correlated, else the identity. The SNR per transmit antenna scales the
//! transmit correlation (`T → ρT`) for the zero-mean ensembles and the mean
//! (`G0 → √ρ G0`) for the Rician one; at 0 dB nothing is scaled.

use mimo_charexp::channels::{correlation_matrix, ArrayGeometry, ChannelSpec};
use mimo_charexp::{ComplexMatrix, C64};

use crate::config::{ChannelConfig, VariantKind};
use crate::matfile::read_matrix;
use crate::CliError;

/// Linear SNR `10^{dB/10}`.
pub fn snr_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

fn side_matrix(
    file: Option<&std::path::Path>,
    correlate: bool,
    n: usize,
    c: &ChannelConfig,
    side: &str,
) -> Result<ComplexMatrix, CliError> {
    if let Some(p) = file {
        let m = read_matrix(p)?;
        if m.rows() != n || m.cols() != n {
            return Err(CliError::Config(format!(
                "{side} correlation file {} is {}x{}, expected {n}x{n}",
                p.display(),
                m.rows(),
                m.cols()
            )));
        }
        return Ok(m);
    }
    if correlate {
        return Ok(correlation_matrix(&ArrayGeometry::new(n, c.d_lambda, c.delta)?)?);
    }
    Ok(ComplexMatrix::identity(n))
}

/// Transmit correlation `T` (before SNR scaling).
pub fn transmit_correlation(c: &ChannelConfig) -> Result<ComplexMatrix, CliError> {
    side_matrix(c.t_file.as_deref(), c.correlate_tx, c.nt, c, "transmit")
}

/// Receive correlation `R`.
pub fn receive_correlation(c: &ChannelConfig) -> Result<ComplexMatrix, CliError> {
    side_matrix(c.r_file.as_deref(), c.correlate_rx, c.nr, c, "receive")
}

/// The channel specification described by `c`.
pub fn build_spec(c: &ChannelConfig) -> Result<ChannelSpec, CliError> {
    let rho = snr_linear(c.snr_db);
    let scaled_t = |t: ComplexMatrix| if rho == 1.0 { t } else { t.scale(&C64::new(rho, 0.0)) };
    let spec = match c.variant {
        VariantKind::Iid if rho == 1.0 => ChannelSpec::iid(c.nt, c.nr)?,
        VariantKind::Iid => ChannelSpec::semi_correlated(scaled_t(ComplexMatrix::identity(c.nt)), c.nr)?,
        VariantKind::SemiCorrelated => ChannelSpec::semi_correlated(scaled_t(transmit_correlation(c)?), c.nr)?,
        VariantKind::FullyCorrelated => {
            ChannelSpec::fully_correlated(scaled_t(transmit_correlation(c)?), receive_correlation(c)?)?
        }
        VariantKind::Rician => {
            let p = c
                .g0_file
                .as_deref()
                .ok_or_else(|| CliError::Config("[channel] variant = rician needs g0_file".into()))?;
            let g0 = read_matrix(p)?;
            if g0.rows() != c.nr || g0.cols() != c.nt {
                return Err(CliError::Config(format!(
                    "mean file {} is {}x{}, expected nr x nt = {}x{}",
                    p.display(),
                    g0.rows(),
                    g0.cols(),
                    c.nr,
                    c.nt
                )));
            }
            let g0 = if rho == 1.0 {
                g0
            } else {
                g0.scale(&C64::new(rho.sqrt(), 0.0))
            };
            ChannelSpec::nonzero_mean(g0)?
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Overrides, RunConfig};
    use mimo_charexp::channels::Variant;
    use std::path::Path;

    fn channel(text: &str) -> ChannelConfig {
        RunConfig::from_text(text, Path::new(""), &Overrides::default())
            .unwrap()
            .channel
    }

    #[test]
    fn variants_map_to_specs() {
        let s = build_spec(&channel("[channel]\nnt = 3\nnr = 2\n")).unwrap();
        assert!(matches!(s.variant(), Variant::Iid));
        let s = build_spec(&channel("[channel]\nsnr_db = 10\n")).unwrap();
        match s.variant() {
            Variant::SemiCorrelated { t } => assert!((t[(0, 0)].re - 10.0).abs() < 1e-12),
            v => panic!("unexpected {v:?}"),
        }
        let s = build_spec(&channel("[channel]\nvariant = fullcorr\nnt = 4\nnr = 3\n")).unwrap();
        assert!(matches!(s.variant(), Variant::FullyCorrelated { .. }));
        assert_eq!((s.nt(), s.nr()), (4, 3));
        let s = build_spec(&channel("[channel]\nvariant = semicorr\ncorrelate_tx = false\n")).unwrap();
        match s.variant() {
            Variant::SemiCorrelated { t } => assert_eq!(t, &ComplexMatrix::identity(2)),
            Variant::Iid => {}
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn file_inputs_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g0.txt"), "2 2\n1 0 0 0\n0 0 0.5 0\n").unwrap();
        std::fs::write(dir.path().join("t.txt"), "2 2\n1 0 0.2 0\n0.2 0 1 0\n").unwrap();
        let cfg = |text: &str| {
            RunConfig::from_text(text, dir.path(), &Overrides::default())
                .unwrap()
                .channel
        };
        let s = build_spec(&cfg("[channel]\nvariant = rician\ng0_file = g0.txt\nsnr_db = 20\n")).unwrap();
        match s.variant() {
            Variant::NonzeroMean { g0 } => assert!((g0[(0, 0)].re - 10.0).abs() < 1e-12),
            v => panic!("unexpected {v:?}"),
        }
        let s = build_spec(&cfg("[channel]\nvariant = semicorr\nt_file = t.txt\nnr = 3\n")).unwrap();
        assert_eq!(s.nr(), 3);
        for bad in [
            "[channel]\nvariant = rician\n",
            "[channel]\nvariant = rician\ng0_file = g0.txt\nnt = 3\n",
            "[channel]\nvariant = semicorr\nt_file = missing.txt\n",
            "[channel]\nvariant = semicorr\nt_file = t.txt\nnt = 3\n",
            "[channel]\nvariant = semicorr\nd_lambda = 0\n",
        ] {
            let e = build_spec(&cfg(bad)).expect_err(bad);
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
    }
}
