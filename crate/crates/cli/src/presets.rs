//! Figure dataset presets.

use std::str::FromStr;

use flipkljn_core::noise::Snr;
use flipkljn_core::protocol::{DetectorKind, Scheme};

use crate::settings::Settings;

pub const FIG4_N: [usize; 10] = [10, 15, 20, 25, 30, 40, 50, 60, 75, 100];
pub const FIG5_ALPHA: [f64; 7] = [5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 15.0];
pub const FIG5_N: [usize; 2] = [100, 200];
pub const FIG6_ALPHA: [f64; 3] = [5.0, 10.0, 15.0];
pub const SNR_DB: [f64; 8] = [6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0];
const SCHEMES: [Scheme; 2] = [Scheme::ClassicalKljn, Scheme::FlipKljn];
const DETECTORS: [DetectorKind; 2] = [DetectorKind::VoltageOnly, DetectorKind::Jvcd];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// BER against N.
    Fig4,
    /// BER against alpha for two sample counts.
    Fig5,
    /// JVCD BER against SNR for several alphas.
    Fig6,
    /// JVCD discarded-bit percentage against SNR.
    Fig8,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig8 => "fig8",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig4" | "fig4_ber_vs_N" => Ok(Preset::Fig4),
            "fig5" | "fig5_ber_vs_alpha" => Ok(Preset::Fig5),
            "fig6" | "fig6_ber_vs_snr" => Ok(Preset::Fig6),
            "fig8" | "fig8_discard_vs_snr" => Ok(Preset::Fig8),
            _ => Err(format!("unknown preset `{s}` (fig4, fig5, fig6, fig8)")),
        }
    }
}

/// One row of a figure dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub scheme: Scheme,
    pub detector: DetectorKind,
    pub alpha: f64,
    pub samples: usize,
    pub snr_v: Snr,
    pub snr_i: Snr,
}

/// Grid of a preset in output order: scheme, then detector, then the swept
/// parameters. Settings supply alpha, N and SNR where the preset does not
/// sweep them.
pub fn grid(preset: Preset, s: &Settings) -> Vec<GridPoint> {
    let base = |scheme, detector| GridPoint {
        scheme,
        detector,
        alpha: s.alpha,
        samples: s.samples,
        snr_v: s.snr_v,
        snr_i: s.snr_i,
    };
    let mut out = Vec::new();
    match preset {
        Preset::Fig4 => {
            for scheme in SCHEMES {
                for detector in DETECTORS {
                    for n in FIG4_N {
                        out.push(GridPoint { samples: n, ..base(scheme, detector) });
                    }
                }
            }
        }
        Preset::Fig5 => {
            let alphas = s.alphas.clone().unwrap_or(FIG5_ALPHA.to_vec());
            for scheme in SCHEMES {
                for detector in DETECTORS {
                    for n in FIG5_N {
                        for &alpha in &alphas {
                            out.push(GridPoint { alpha, samples: n, ..base(scheme, detector) });
                        }
                    }
                }
            }
        }
        Preset::Fig6 | Preset::Fig8 => {
            let alphas = match preset {
                Preset::Fig6 => s.alphas.clone().unwrap_or(FIG6_ALPHA.to_vec()),
                _ => vec![s.alpha],
            };
            for scheme in SCHEMES {
                for &alpha in &alphas {
                    for db in SNR_DB {
                        out.push(GridPoint {
                            alpha,
                            snr_v: Snr::Db(db),
                            snr_i: Snr::Db(db),
                            ..base(scheme, DetectorKind::Jvcd)
                        });
                    }
                }
            }
        }
    }
    out
}
