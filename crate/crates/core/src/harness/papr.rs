//! PAPR CCDF of data blocks.

use serde::{Deserialize, Serialize};

use super::config::{GuardKind, PaprConfig};
use super::{point_stream, run_batches};
use crate::numerics::{self, RngStream};
use crate::waveform::{self, FrameConfig, Waveform, QAM_ORDER};
use crate::{Complex64, Error, Result};

/// PAPR samples (dB) of one waveform configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PaprSeries {
    pub waveform: Waveform,
    pub guard: GuardKind,
    pub subcarriers: usize,
    /// Sorted ascending.
    pub papr_db: Vec<f64>,
}

impl PaprSeries {
    /// Fraction of blocks whose PAPR exceeds `threshold_db`.
    pub fn ccdf(&self, threshold_db: f64) -> f64 {
        let below = self.papr_db.partition_point(|&p| p <= threshold_db);
        (self.papr_db.len() - below) as f64 / self.papr_db.len() as f64
    }

    /// Threshold exceeded by a fraction `level` of the blocks (linear
    /// interpolation between order statistics).
    pub fn threshold_at(&self, level: f64) -> f64 {
        let n = self.papr_db.len();
        let pos = ((1.0 - level) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let f = pos - lo as f64;
        self.papr_db[lo] * (1.0 - f) + self.papr_db[hi] * f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaprRow {
    pub waveform: Waveform,
    pub guard: GuardKind,
    #[serde(rename = "N")]
    pub subcarriers: usize,
    pub threshold_db: f64,
    pub ccdf: f64,
}

fn frame_for(cfg: &PaprConfig, n: usize, guard: GuardKind) -> Result<FrameConfig> {
    let l = (n as f64 * cfg.block_fraction).round() as usize;
    let frame = match guard {
        GuardKind::Cp => FrameConfig::cp(n, l, 2, 2, 1.0),
        GuardKind::Fgi => FrameConfig::fgi(n, l, (l as f64 * cfg.ref_fraction).round() as usize, 2, 2, 1.0),
    };
    frame.validate()?;
    Ok(frame)
}

/// Frequency-domain data block: spread symbols (with the FGI tail) for
/// SI-DFT-s-OFDM, QAM symbols on the subcarriers for OFDM.
fn random_data_block(frame: &FrameConfig, wf: Waveform, tail: &[Complex64], rng: &mut RngStream) -> Result<Vec<Complex64>> {
    let k = match wf {
        Waveform::SiDftsOfdm => frame.data_symbols(),
        Waveform::Ofdm => frame.block_size,
    };
    let mut symbols = numerics::qam_map(&rng.random_bits(2 * k), QAM_ORDER)?;
    match wf {
        Waveform::SiDftsOfdm => {
            symbols.extend_from_slice(tail);
            waveform::spread_data_block(&symbols, frame.block_size)
        }
        Waveform::Ofdm => Ok(symbols),
    }
}

/// Monte Carlo PAPR of `cfg.blocks` random data blocks for every waveform,
/// guard and IDFT size. OFDM is evaluated once per size (it has no FGI).
pub fn run_papr(cfg: &PaprConfig, seed: u64) -> Result<Vec<PaprSeries>> {
    if cfg.blocks == 0 {
        return Err(Error::InvalidConfig("papr.blocks must be at least 1".into()));
    }
    let mut out = Vec::new();
    for &n in &cfg.subcarriers {
        for &wf in &cfg.waveforms {
            let guards: &[GuardKind] = match wf {
                Waveform::Ofdm => &[GuardKind::Cp],
                Waveform::SiDftsOfdm => &cfg.guards,
            };
            for &guard in guards {
                let frame = frame_for(cfg, n, guard)?;
                let zc = waveform::reference_sequence(&frame)?;
                let tail = &zc[frame.data_symbols()..];
                let tag = point_stream(&[n as u64, wf as u64, guard as u64]);
                let root = RngStream::new(seed, tag);
                let mut papr_db = Vec::with_capacity(cfg.blocks);
                run_batches(
                    &root,
                    4096,
                    cfg.blocks,
                    |_, rng| {
                        let block = random_data_block(&frame, wf, tail, rng)?;
                        let p = waveform::papr_oversampled(&block, n, cfg.oversample)?;
                        Ok(numerics::linear_to_db(p))
                    },
                    |p| papr_db.push(p),
                    || false,
                )?;
                papr_db.sort_by(f64::total_cmp);
                out.push(PaprSeries {
                    waveform: wf,
                    guard,
                    subcarriers: n,
                    papr_db,
                });
            }
        }
    }
    Ok(out)
}

/// CCDF rows on the `step_db` threshold grid `0, step, …, max_db`.
pub fn rows(series: &[PaprSeries], cfg: &PaprConfig) -> Vec<PaprRow> {
    let steps = (cfg.max_db / cfg.step_db).round() as usize;
    series
        .iter()
        .flat_map(|s| {
            (0..=steps).map(move |i| {
                let threshold_db = i as f64 * cfg.step_db;
                PaprRow {
                    waveform: s.waveform,
                    guard: s.guard,
                    subcarriers: s.subcarriers,
                    threshold_db,
                    ccdf: s.ccdf(threshold_db),
                }
            })
        })
        .collect()
}
