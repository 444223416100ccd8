//! Classical receiver: demapping, LS channel estimation at reference blocks,
//! per-subcarrier interpolation, ZF/MMSE equalization and demodulation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics;
use crate::waveform::{self, FrameConfig, Waveform, QAM_ORDER};
use crate::{Error, Result};

/// Received frame after the N-point DFT and subcarrier demapping.
#[derive(Clone, Debug)]
pub struct RxFrame {
    /// `Y_m`, one L-bin row per frame block.
    pub blocks: Vec<Vec<Complex64>>,
    pub ref_positions: Vec<usize>,
    pub cfg: FrameConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfrSource {
    LsAtReference,
    Interpolated,
}

/// Channel frequency response rows at the listed frame blocks.
#[derive(Clone, Debug)]
pub struct CfrEstimate {
    pub positions: Vec<usize>,
    pub values: Vec<Vec<Complex64>>,
    pub source: CfrSource,
}

impl CfrEstimate {
    pub fn row(&self, m: usize) -> Option<&[Complex64]> {
        self.positions.iter().position(|&p| p == m).map(|i| self.values[i].as_slice())
    }
}

/// Frequency-domain equalizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Equalizer {
    Zf,
    /// Regularised by the per-subcarrier noise-to-signal ratio
    /// `10^{-snr_db/10}`.
    Mmse { snr_db: f64 },
}

impl Equalizer {
    pub fn label(&self) -> &'static str {
        match self {
            Equalizer::Zf => "zf",
            Equalizer::Mmse { .. } => "mmse",
        }
    }
}

/// Equalized data blocks (frame order, reference blocks skipped).
#[derive(Clone, Debug)]
pub struct Equalized {
    pub positions: Vec<usize>,
    pub blocks: Vec<Vec<Complex64>>,
    /// ZF bins with a zero channel estimate (output forced to 0).
    pub zero_bins: usize,
}

/// Remove the guard, N-point DFT each block and keep bins `0..L`.
pub fn demap_to_freq(cfg: &FrameConfig, samples: &[Complex64]) -> Result<RxFrame> {
    cfg.validate()?;
    if samples.len() != cfg.frame_samples() {
        return Err(Error::LengthMismatch {
            expected: cfg.frame_samples(),
            got: samples.len(),
        });
    }
    let blocks = (0..cfg.blocks)
        .map(|m| {
            let mut buf = waveform::useful_samples(cfg, samples, m).to_vec();
            numerics::dft_in_place(&mut buf);
            buf.truncate(cfg.block_size);
            buf
        })
        .collect();
    Ok(RxFrame {
        blocks,
        ref_positions: cfg.ref_positions(),
        cfg: cfg.clone(),
    })
}

/// LS estimate `Ĥ = Y / P` at every reference block.
pub fn ls_estimate(rx: &RxFrame, reference: &[Complex64]) -> Result<CfrEstimate> {
    if reference.len() != rx.cfg.block_size {
        return Err(Error::LengthMismatch {
            expected: rx.cfg.block_size,
            got: reference.len(),
        });
    }
    assert!(reference.iter().all(|p| p.norm_sqr() > 0.0), "reference block has a zero bin");
    let values = rx
        .ref_positions
        .iter()
        .map(|&m| rx.blocks[m].iter().zip(reference).map(|(y, p)| y / p).collect())
        .collect();
    Ok(CfrEstimate {
        positions: rx.ref_positions.clone(),
        values,
        source: CfrSource::LsAtReference,
    })
}

/// Per-subcarrier linear interpolation in block index between the
/// surrounding reference blocks; held constant outside the first/last one.
pub fn interpolate_cfr(estimate: &CfrEstimate, cfg: &FrameConfig) -> Result<CfrEstimate> {
    if estimate.positions.is_empty() {
        return Err(Error::Empty("reference CFR"));
    }
    let first = estimate.positions[0];
    let last = *estimate.positions.last().unwrap();
    let values = (0..cfg.blocks)
        .map(|m| {
            if m <= first {
                return estimate.values[0].clone();
            }
            if m >= last {
                return estimate.values[estimate.values.len() - 1].clone();
            }
            let hi = estimate.positions.partition_point(|&p| p < m);
            if estimate.positions[hi] == m {
                return estimate.values[hi].clone();
            }
            let (m0, m1) = (estimate.positions[hi - 1], estimate.positions[hi]);
            let w = (m - m0) as f64 / (m1 - m0) as f64;
            estimate.values[hi - 1]
                .iter()
                .zip(&estimate.values[hi])
                .map(|(a, b)| a * (1.0 - w) + b * w)
                .collect()
        })
        .collect();
    Ok(CfrEstimate {
        positions: (0..cfg.blocks).collect(),
        values,
        source: CfrSource::Interpolated,
    })
}

/// Equalize every data block of `rx` with the CFR rows of `cfr`.
pub fn equalize(rx: &RxFrame, cfr: &CfrEstimate, method: Equalizer) -> Result<Equalized> {
    let positions = rx.cfg.data_positions();
    let mut zero_bins = 0;
    let mut blocks = Vec::with_capacity(positions.len());
    for &m in &positions {
        let h = cfr
            .row(m)
            .ok_or_else(|| Error::Shape(format!("no CFR row for block {m}")))?;
        if h.len() != rx.blocks[m].len() {
            return Err(Error::LengthMismatch {
                expected: rx.blocks[m].len(),
                got: h.len(),
            });
        }
        let row = rx.blocks[m]
            .iter()
            .zip(h)
            .map(|(y, h)| {
                let g = h.norm_sqr();
                match method {
                    Equalizer::Zf => {
                        if g == 0.0 {
                            zero_bins += 1;
                            Complex64::new(0.0, 0.0)
                        } else {
                            // Written as y h* / |h|² so that ZF and MMSE
                            // differ only by a positive real factor.
                            y * h.conj() / g
                        }
                    }
                    Equalizer::Mmse { snr_db } => y * h.conj() / (g + numerics::db_to_linear(-snr_db)),
                }
            })
            .collect();
        blocks.push(row);
    }
    Ok(Equalized {
        positions,
        blocks,
        zero_bins,
    })
}

/// Recovered data symbols of each equalized block (L-point IDFT and FGI
/// tail removal for SI-DFT-s-OFDM, identity for OFDM).
pub fn despread(cfg: &FrameConfig, waveform: Waveform, eq: &Equalized) -> Vec<Vec<Complex64>> {
    eq.blocks
        .iter()
        .map(|b| match waveform {
            Waveform::SiDftsOfdm => {
                let mut s = numerics::idft(b);
                s.truncate(cfg.data_symbols());
                s
            }
            Waveform::Ofdm => b.clone(),
        })
        .collect()
}

/// Despread and hard-demap all data blocks into a bit vector.
pub fn despread_and_demod(cfg: &FrameConfig, waveform: Waveform, eq: &Equalized) -> Result<Vec<u8>> {
    let symbols: Vec<Complex64> = despread(cfg, waveform, eq).into_iter().flatten().collect();
    numerics::qam_demap(&symbols, QAM_ORDER)
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            got: rx.len(),
        });
    }
    if tx.is_empty() {
        return Err(Error::Empty("bit sequence"));
    }
    Ok(bit_errors(tx, rx) as f64 / tx.len() as f64)
}

pub fn bit_errors(tx: &[u8], rx: &[u8]) -> usize {
    tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count()
}

/// LS → interpolation → equalization → demodulation in one call.
pub fn receive_bits(cfg: &FrameConfig, waveform: Waveform, samples: &[Complex64], method: Equalizer) -> Result<Vec<u8>> {
    let rx = demap_to_freq(cfg, samples)?;
    let reference = waveform::build_reference_block(cfg)?;
    let cfr = interpolate_cfr(&ls_estimate(&rx, &reference)?, cfg)?;
    let eq = equalize(&rx, &cfr, method)?;
    despread_and_demod(cfg, waveform, &eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{self, ChannelRealization, PathSpec};
    use crate::numerics::RngStream;
    use crate::waveform::{random_frame, FrameConfig, Waveform};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn loopback_recovers_frequency_blocks() {
        for cfg in [FrameConfig::cp(64, 32, 4, 2, 7.68e6), FrameConfig::fgi(64, 32, 8, 4, 2, 7.68e6)] {
            let mut rng = RngStream::new(1, 0);
            let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
            let x = waveform::modulate(&cfg, &f).unwrap();
            let rx = demap_to_freq(&cfg, &x).unwrap();
            for (a, b) in rx.blocks.iter().zip(&f.freq_blocks) {
                assert!(a.iter().zip(b).all(|(p, q)| (p - q).norm() < 1e-10));
            }
            // Kept plus discarded bins carry the whole block energy.
            let full = numerics::dft(waveform::useful_samples(&cfg, &x, 1));
            let e_kept = numerics::energy(&full[..32]);
            let e_rest = numerics::energy(&full[32..]);
            let e_time = numerics::energy(waveform::useful_samples(&cfg, &x, 1));
            assert!((e_kept + e_rest - e_time).abs() < 1e-10);
            assert!(demap_to_freq(&cfg, &x[3..]).is_err());
        }
    }

    #[test]
    fn in_guard_delay_is_a_phase_ramp() {
        let cfg = FrameConfig::cp(64, 32, 4, 2, 7.68e6);
        let mut rng = RngStream::new(2, 0);
        let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
        let x = waveform::modulate(&cfg, &f).unwrap();
        let alpha = c(0.6, -0.3);
        let tau = 0.77 * cfg.cp_duration();
        let real = ChannelRealization::new(vec![PathSpec::new(alpha, tau, 0.0)]);
        let y = channel::apply_channel(&cfg, &real, &x).unwrap();
        let rx = demap_to_freq(&cfg, &y).unwrap();
        for m in 0..cfg.blocks {
            for n in 0..32 {
                let h = alpha * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * cfg.subcarrier_spacing * tau);
                assert!((rx.blocks[m][n] - h * f.freq_blocks[m][n]).norm() < 1e-9);
            }
        }
        // LS at the reference blocks recovers the closed form.
        let p = waveform::build_reference_block(&cfg).unwrap();
        let est = ls_estimate(&rx, &p).unwrap();
        for row in &est.values {
            for (n, v) in row.iter().enumerate() {
                let h = alpha * Complex64::from_polar(1.0, -2.0 * PI * n as f64 * cfg.subcarrier_spacing * tau);
                assert!((v - h).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_channel_ls_is_one() {
        let cfg = FrameConfig::cp(64, 32, 6, 3, 7.68e6);
        let mut rng = RngStream::new(3, 0);
        let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
        let rx = demap_to_freq(&cfg, &waveform::modulate(&cfg, &f).unwrap()).unwrap();
        let est = ls_estimate(&rx, &waveform::build_reference_block(&cfg).unwrap()).unwrap();
        assert_eq!(est.positions, vec![0, 3]);
        assert!(est.values.iter().flatten().all(|h| (h - c(1.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn ls_noise_variance_equals_bin_noise() {
        let cfg = FrameConfig::cp(64, 32, 10, 1, 7.68e6);
        let p = waveform::build_reference_block(&cfg).unwrap();
        let mut rng = RngStream::new(4, 0);
        let snr_db = 6.0;
        let var = numerics::db_to_linear(-snr_db);
        let mut acc = 0.0;
        let mut bias = c(0.0, 0.0);
        let mut count = 0usize;
        while count < 100_000 {
            let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
            let mut x = waveform::modulate(&cfg, &f).unwrap();
            // Noise of variance `var` per frequency bin after the unitary DFT.
            channel::add_noise(&mut x, var, &mut rng).unwrap();
            let rx = demap_to_freq(&cfg, &x).unwrap();
            for row in ls_estimate(&rx, &p).unwrap().values {
                for h in row {
                    acc += (h - 1.0).norm_sqr();
                    bias += h - 1.0;
                    count += 1;
                }
            }
        }
        let mse = acc / count as f64;
        assert!((mse - var).abs() < 0.05 * var, "{mse} vs {var}");
        assert!((bias / count as f64).norm() < 5.0 * (var / count as f64).sqrt());
    }

    #[test]
    fn interpolation_rules() {
        let cfg = FrameConfig::cp(8, 4, 5, 2, 1e6);
        let a = vec![c(1.0, 0.0); 4];
        let b = vec![c(0.0, 2.0); 4];
        let est = CfrEstimate {
            positions: vec![0, 2, 4],
            values: vec![a.clone(), b.clone(), a.clone()],
            source: CfrSource::LsAtReference,
        };
        let full = interpolate_cfr(&est, &cfg).unwrap();
        assert_eq!(full.values.len(), 5);
        assert!(full.values[1].iter().all(|h| (h - c(0.5, 1.0)).norm() < 1e-15));
        assert_eq!(full.values[2], b);

        // Hold after the last reference block.
        let cfg = FrameConfig::cp(8, 4, 4, 2, 1e6);
        let est = CfrEstimate {
            positions: vec![0, 2],
            values: vec![a.clone(), b.clone()],
            source: CfrSource::LsAtReference,
        };
        let full = interpolate_cfr(&est, &cfg).unwrap();
        assert_eq!(full.values[3], b);

        let empty = CfrEstimate {
            positions: vec![],
            values: vec![],
            source: CfrSource::LsAtReference,
        };
        assert!(interpolate_cfr(&empty, &cfg).is_err());
    }

    #[test]
    fn interpolation_error_within_second_order_bound() {
        // Single Doppler path: H_m = e^{j2πν m T_o}; linear interpolation at
        // the midpoint between references two blocks apart errs by at most
        // (ω Δ)²/8 with ω = 2πν T_o and Δ = 2.
        let cfg = FrameConfig::cp(64, 32, 9, 2, 1.92e6);
        let nu = 30e3;
        let real = ChannelRealization::new(vec![PathSpec::new(c(1.0, 0.0), 0.0, nu)]);
        let truth: Vec<Vec<Complex64>> = (0..cfg.blocks)
            .map(|m| {
                let ph = Complex64::from_polar(1.0, 2.0 * PI * nu * m as f64 * cfg.block_duration());
                vec![ph; 32]
            })
            .collect();
        let est = CfrEstimate {
            positions: cfg.ref_positions(),
            values: cfg.ref_positions().iter().map(|&m| truth[m].clone()).collect(),
            source: CfrSource::LsAtReference,
        };
        let full = interpolate_cfr(&est, &cfg).unwrap();
        let w = 2.0 * PI * nu * cfg.block_duration();
        let bound = (w * 2.0).powi(2) / 8.0;
        for m in 0..cfg.blocks {
            let err = (full.values[m][0] - truth[m][0]).norm();
            assert!(err <= bound + 1e-12, "m={m}: {err} > {bound}");
        }
        let _ = real;
    }

    #[test]
    fn zf_and_mmse_basics() {
        let cfg = FrameConfig::cp(64, 32, 4, 2, 7.68e6);
        let mut rng = RngStream::new(5, 0);
        let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
        let alpha = c(0.3, 0.9);
        let real = ChannelRealization::new(vec![PathSpec::new(alpha, 3e-9, 0.0)]);
        let y = channel::apply_channel(&cfg, &real, &waveform::modulate(&cfg, &f).unwrap()).unwrap();
        let rx = demap_to_freq(&cfg, &y).unwrap();
        let perfect = CfrEstimate {
            positions: (0..cfg.blocks).collect(),
            values: (0..cfg.blocks).map(|m| real.block_cfr(&cfg, m)).collect(),
            source: CfrSource::Interpolated,
        };
        let eq = equalize(&rx, &perfect, Equalizer::Zf).unwrap();
        for (row, &m) in eq.blocks.iter().zip(&eq.positions) {
            assert!(row.iter().zip(&f.freq_blocks[m]).all(|(a, b)| (a - b).norm() < 1e-9));
        }
        let weak = equalize(&rx, &perfect, Equalizer::Mmse { snr_db: -300.0 }).unwrap();
        assert!(weak.blocks.iter().flatten().all(|v| v.norm() < 1e-12));

        let mut zeroed = perfect.clone();
        zeroed.values[1][5] = c(0.0, 0.0);
        let eq = equalize(&rx, &zeroed, Equalizer::Zf).unwrap();
        assert_eq!(eq.zero_bins, 1);
        assert_eq!(eq.blocks[0][5], c(0.0, 0.0));
    }

    #[test]
    fn ofdm_zf_mmse_decisions_identical() {
        let cfg = FrameConfig::cp(64, 32, 6, 3, 7.68e6);
        let mut rng = RngStream::new(6, 0);
        for snr in [0.0, 5.0, 10.0] {
            for _ in 0..20 {
                let f = random_frame(&cfg, Waveform::Ofdm, &mut rng).unwrap();
                let real = channel::sample_training_channel(&cfg, &channel::Scenario::multipath(4), &mut rng)
                    .unwrap()
                    .with_snr_db(snr);
                let (y, _) = channel::transmit(&cfg, &real, &waveform::modulate(&cfg, &f).unwrap(), &mut rng).unwrap();
                let zf = receive_bits(&cfg, Waveform::Ofdm, &y, Equalizer::Zf).unwrap();
                let mmse = receive_bits(&cfg, Waveform::Ofdm, &y, Equalizer::Mmse { snr_db: snr }).unwrap();
                assert_eq!(zf, mmse);
            }
        }
    }

    #[test]
    fn noiseless_chain_is_error_free() {
        let mut rng = RngStream::new(7, 0);
        for cfg in [FrameConfig::cp(64, 32, 6, 3, 7.68e6), FrameConfig::fgi(64, 32, 8, 6, 3, 7.68e6)] {
            for _ in 0..10 {
                let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
                let x = waveform::modulate(&cfg, &f).unwrap();
                let bits = receive_bits(&cfg, Waveform::SiDftsOfdm, &x, Equalizer::Zf).unwrap();
                assert_eq!(ber(&f.payload_bits, &bits).unwrap(), 0.0);
                let eq = {
                    let rx = demap_to_freq(&cfg, &x).unwrap();
                    let p = waveform::build_reference_block(&cfg).unwrap();
                    equalize(&rx, &interpolate_cfr(&ls_estimate(&rx, &p).unwrap(), &cfg).unwrap(), Equalizer::Zf).unwrap()
                };
                assert!(despread(&cfg, Waveform::SiDftsOfdm, &eq).iter().all(|b| b.len() == cfg.data_symbols()));
            }
        }
        // Multipath inside the CP.
        let cfg = FrameConfig::cp(64, 32, 6, 3, 7.68e6);
        for _ in 0..20 {
            let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
            let real = channel::sample_training_channel(&cfg, &channel::Scenario::multipath(4), &mut rng).unwrap();
            let y = channel::apply_channel(&cfg, &real, &waveform::modulate(&cfg, &f).unwrap()).unwrap();
            let bits = receive_bits(&cfg, Waveform::SiDftsOfdm, &y, Equalizer::Zf).unwrap();
            assert_eq!(bit_errors(&f.payload_bits, &bits), 0);
        }
    }

    #[test]
    fn ber_contract() {
        assert_eq!(ber(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(ber(&[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
        assert!(ber(&[0, 1], &[0]).is_err());
        let mut rng = RngStream::new(8, 0);
        let a = rng.random_bits(100_000);
        let b = rng.random_bits(100_000);
        // 5 binomial standard deviations.
        assert!((ber(&a, &b).unwrap() - 0.5).abs() < 5.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn payload_ls_is_noisier_than_reference_ls() {
        // Dividing by the spread data bins, whose moduli fluctuate, amplifies
        // noise compared with the unit-modulus reference.
        let cfg = FrameConfig::cp(64, 32, 4, 2, 7.68e6);
        let p = waveform::build_reference_block(&cfg).unwrap();
        let mut rng = RngStream::new(9, 0);
        let var = 0.01;
        let (mut ref_mse, mut data_mse, mut nr, mut nd) = (0.0, 0.0, 0usize, 0usize);
        for _ in 0..500 {
            let f = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
            let mut x = waveform::modulate(&cfg, &f).unwrap();
            channel::add_noise(&mut x, var, &mut rng).unwrap();
            let rx = demap_to_freq(&cfg, &x).unwrap();
            for row in ls_estimate(&rx, &p).unwrap().values {
                ref_mse += row.iter().map(|h| (h - 1.0).norm_sqr()).sum::<f64>();
                nr += row.len();
            }
            for m in cfg.data_positions() {
                // Spread QPSK bins can cancel exactly; those are skipped.
                for (y, xk) in rx.blocks[m].iter().zip(&f.freq_blocks[m]).filter(|(_, x)| x.norm() > 1e-9) {
                    data_mse += (y / xk - 1.0).norm_sqr();
                    nd += 1;
                }
            }
        }
        let (d, r) = (data_mse / nd as f64, ref_mse / nr as f64);
        assert!(d > r, "{d} vs {r}");
    }
}
