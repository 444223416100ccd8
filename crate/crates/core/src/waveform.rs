//! Frame assembly and modulation for SI-DFT-s-OFDM (CP and flexible guard
//! interval) and the CP-OFDM comparator, plus the PAPR statistic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{self, RngStream, QPSK_BITS};
use crate::{Error, Result};

/// Modulation order used throughout (4-QAM).
pub const QAM_ORDER: u32 = 4;

/// Guard scheme between consecutive blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Guard {
    /// Cyclic prefix of `samples` copied tail samples.
    Cp { samples: usize },
    /// Flexible guard interval: a fixed reference tail inside every data block.
    Fgi,
}

/// Numerology of one frame.
///
/// `ref_symbols` is the number of fixed reference symbols `K_p` at the end of
/// each data block; it must be zero for the CP guard and positive for FGI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// IDFT size `N`.
    pub subcarriers: usize,
    /// Spreading block size `L` (occupied subcarriers).
    pub block_size: usize,
    /// Fixed reference symbols per FGI data block, `K_p`.
    pub ref_symbols: usize,
    /// Reference-block spacing `S_r` in blocks.
    pub ref_spacing: usize,
    /// Blocks per frame `M`.
    pub blocks: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Carrier frequency in Hz.
    pub carrier: f64,
    pub guard: Guard,
    pub zc_root: u64,
}

impl FrameConfig {
    /// CP frame with `N_cp = N/4`, carrier 0.3 THz and ZC root 1.
    pub fn cp(subcarriers: usize, block_size: usize, blocks: usize, ref_spacing: usize, subcarrier_spacing: f64) -> Self {
        Self {
            subcarriers,
            block_size,
            ref_symbols: 0,
            ref_spacing,
            blocks,
            subcarrier_spacing,
            carrier: 0.3e12,
            guard: Guard::Cp {
                samples: subcarriers / 4,
            },
            zc_root: 1,
        }
    }

    /// FGI frame with `ref_symbols` fixed tail symbols per data block.
    pub fn fgi(
        subcarriers: usize,
        block_size: usize,
        ref_symbols: usize,
        blocks: usize,
        ref_spacing: usize,
        subcarrier_spacing: f64,
    ) -> Self {
        Self {
            ref_symbols,
            guard: Guard::Fgi,
            ..Self::cp(subcarriers, block_size, blocks, ref_spacing, subcarrier_spacing)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.subcarriers == 0 || self.block_size == 0 {
            return bad("N and L must be positive".into());
        }
        if self.block_size > self.subcarriers {
            return bad(format!("L = {} exceeds N = {}", self.block_size, self.subcarriers));
        }
        if self.ref_spacing == 0 {
            return bad("reference spacing S_r must be at least 1".into());
        }
        if self.blocks == 0 {
            return bad("a frame needs at least one block".into());
        }
        if !(self.subcarrier_spacing > 0.0) || !self.subcarrier_spacing.is_finite() {
            return bad(format!("subcarrier spacing {} Hz", self.subcarrier_spacing));
        }
        if !(self.carrier >= 0.0) {
            return bad(format!("carrier {} Hz", self.carrier));
        }
        match self.guard {
            Guard::Cp { samples } => {
                if samples >= self.subcarriers {
                    return bad(format!("N_cp = {samples} must be below N = {}", self.subcarriers));
                }
                if self.ref_symbols != 0 {
                    return bad("K_p must be 0 with a cyclic prefix".into());
                }
            }
            Guard::Fgi => {
                if self.ref_symbols == 0 || self.ref_symbols >= self.block_size {
                    return bad(format!(
                        "FGI needs 0 < K_p < L, got K_p = {} with L = {}",
                        self.ref_symbols, self.block_size
                    ));
                }
                if self.fgi_guard_samples() == 0 {
                    return bad("K_GI = floor(K_p N / L) is zero".into());
                }
            }
        }
        if numerics::gcd(self.zc_root, self.block_size as u64) != 1 {
            return Err(Error::NotCoprime {
                root: self.zc_root,
                length: self.block_size,
            });
        }
        Ok(())
    }

    /// Data symbols per data block, `K`.
    pub fn data_symbols(&self) -> usize {
        self.block_size - self.ref_symbols
    }

    /// `K_GI = floor(K_p N / L)`.
    pub fn fgi_guard_samples(&self) -> usize {
        self.ref_symbols * self.subcarriers / self.block_size
    }

    /// Prefix samples prepended to every block (zero for FGI).
    pub fn cp_samples(&self) -> usize {
        match self.guard {
            Guard::Cp { samples } => samples,
            Guard::Fgi => 0,
        }
    }

    /// Guard length in samples: `N_cp` or `K_GI`.
    pub fn guard_samples(&self) -> usize {
        match self.guard {
            Guard::Cp { samples } => samples,
            Guard::Fgi => self.fgi_guard_samples(),
        }
    }

    pub fn samples_per_block(&self) -> usize {
        self.subcarriers + self.cp_samples()
    }

    pub fn frame_samples(&self) -> usize {
        self.blocks * self.samples_per_block()
    }

    pub fn reference_blocks(&self) -> usize {
        self.blocks.div_ceil(self.ref_spacing)
    }

    pub fn data_blocks(&self) -> usize {
        self.blocks - self.reference_blocks()
    }

    pub fn is_reference(&self, m: usize) -> bool {
        m.is_multiple_of(self.ref_spacing)
    }

    pub fn ref_positions(&self) -> Vec<usize> {
        (0..self.blocks).step_by(self.ref_spacing).collect()
    }

    pub fn data_positions(&self) -> Vec<usize> {
        (0..self.blocks).filter(|&m| !self.is_reference(m)).collect()
    }

    /// Payload bits carried by one frame.
    pub fn payload_bits(&self) -> usize {
        self.data_blocks() * self.data_symbols() * QPSK_BITS
    }

    /// Useful symbol duration `T = 1/Δf`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    pub fn sample_period(&self) -> f64 {
        self.symbol_duration() / self.subcarriers as f64
    }

    /// `T_cp = N_cp T / N` (zero for FGI).
    pub fn cp_duration(&self) -> f64 {
        self.cp_samples() as f64 * self.sample_period()
    }

    /// Block duration `T_o`.
    pub fn block_duration(&self) -> f64 {
        self.symbol_duration() + self.cp_duration()
    }

    /// Guard duration in seconds: `T_cp` or `K_GI T / N`.
    pub fn guard_duration(&self) -> f64 {
        self.guard_samples() as f64 * self.sample_period()
    }

    /// Occupied bandwidth `L Δf`.
    pub fn bandwidth(&self) -> f64 {
        self.block_size as f64 * self.subcarrier_spacing
    }
}

/// Which transmitter produced a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    SiDftsOfdm,
    Ofdm,
}

impl Waveform {
    pub fn label(self) -> &'static str {
        match self {
            Waveform::SiDftsOfdm => "si-dfts-ofdm",
            Waveform::Ofdm => "ofdm",
        }
    }
}

/// One assembled frame before the N-point IDFT.
#[derive(Clone, Debug)]
pub struct TxFrame {
    pub waveform: Waveform,
    /// Per-block symbols before spreading: data symbols (plus the FGI tail)
    /// or the time-domain ZC sequence. For OFDM these equal `freq_blocks`.
    pub symbol_blocks: Vec<Vec<Complex64>>,
    /// `X_m`, M blocks of L frequency-domain samples.
    pub freq_blocks: Vec<Vec<Complex64>>,
    pub ref_positions: Vec<usize>,
    pub payload_bits: Vec<u8>,
}

impl TxFrame {
    /// Transmitted data symbols of frame block `m` (FGI tail removed).
    pub fn data_symbols(&self, cfg: &FrameConfig, m: usize) -> &[Complex64] {
        match self.waveform {
            Waveform::SiDftsOfdm => &self.symbol_blocks[m][..cfg.data_symbols()],
            Waveform::Ofdm => &self.symbol_blocks[m],
        }
    }
}

/// Time-domain Zadoff-Chu reference `p` of length L.
pub fn reference_sequence(cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    numerics::zadoff_chu(cfg.block_size, cfg.zc_root)
}

/// Frequency-domain reference block `P_R = DFT(p)`.
pub fn build_reference_block(cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    Ok(numerics::dft(&reference_sequence(cfg)?))
}

/// L-point DFT spreading of one block of symbols.
pub fn spread_data_block(symbols: &[Complex64], block_size: usize) -> Result<Vec<Complex64>> {
    if symbols.len() != block_size {
        return Err(Error::LengthMismatch {
            expected: block_size,
            got: symbols.len(),
        });
    }
    Ok(numerics::dft(symbols))
}

fn check_bits(expected: usize, bits: &[u8]) -> Result<()> {
    if bits.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: bits.len(),
        });
    }
    Ok(())
}

/// Interleave reference and data blocks (`m = S_r q` carries `P_R`).
pub fn assemble_frame(cfg: &FrameConfig, bits: &[u8]) -> Result<TxFrame> {
    cfg.validate()?;
    check_bits(cfg.payload_bits(), bits)?;
    let p = reference_sequence(cfg)?;
    let p_freq = numerics::dft(&p);
    let k = cfg.data_symbols();
    let symbols = numerics::qam_map(bits, QAM_ORDER)?;
    let mut data = symbols.chunks_exact(k);

    let mut symbol_blocks = Vec::with_capacity(cfg.blocks);
    let mut freq_blocks = Vec::with_capacity(cfg.blocks);
    for m in 0..cfg.blocks {
        if cfg.is_reference(m) {
            symbol_blocks.push(p.clone());
            freq_blocks.push(p_freq.clone());
        } else {
            let mut block = data.next().expect("bit count checked").to_vec();
            block.extend_from_slice(&p[k..]);
            freq_blocks.push(spread_data_block(&block, cfg.block_size)?);
            symbol_blocks.push(block);
        }
    }
    Ok(TxFrame {
        waveform: Waveform::SiDftsOfdm,
        symbol_blocks,
        freq_blocks,
        ref_positions: cfg.ref_positions(),
        payload_bits: bits.to_vec(),
    })
}

/// OFDM comparator frame: QAM symbols placed directly on the L subcarriers,
/// reference blocks inserted at the same positions. Requires a CP guard.
pub fn assemble_ofdm_frame(cfg: &FrameConfig, bits: &[u8]) -> Result<TxFrame> {
    cfg.validate()?;
    if cfg.guard == Guard::Fgi {
        return Err(Error::InvalidConfig("the OFDM baseline uses a cyclic prefix".into()));
    }
    check_bits(cfg.payload_bits(), bits)?;
    let p_freq = build_reference_block(cfg)?;
    let symbols = numerics::qam_map(bits, QAM_ORDER)?;
    let mut data = symbols.chunks_exact(cfg.block_size);
    let freq_blocks: Vec<Vec<Complex64>> = (0..cfg.blocks)
        .map(|m| {
            if cfg.is_reference(m) {
                p_freq.clone()
            } else {
                data.next().expect("bit count checked").to_vec()
            }
        })
        .collect();
    Ok(TxFrame {
        waveform: Waveform::Ofdm,
        symbol_blocks: freq_blocks.clone(),
        freq_blocks,
        ref_positions: cfg.ref_positions(),
        payload_bits: bits.to_vec(),
    })
}

/// Draw random payload bits and assemble a frame of the requested waveform.
pub fn random_frame(cfg: &FrameConfig, waveform: Waveform, rng: &mut RngStream) -> Result<TxFrame> {
    let bits = rng.random_bits(cfg.payload_bits());
    match waveform {
        Waveform::SiDftsOfdm => assemble_frame(cfg, &bits),
        Waveform::Ofdm => assemble_ofdm_frame(cfg, &bits),
    }
}

/// N-point IDFT of one L-bin block mapped to subcarriers `0..L`.
pub fn block_to_time(freq: &[Complex64], subcarriers: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); subcarriers];
    buf[..freq.len()].copy_from_slice(freq);
    numerics::idft_in_place(&mut buf);
    buf
}

/// Subcarrier mapping, N-point IDFT and guard insertion for every block.
pub fn modulate(cfg: &FrameConfig, frame: &TxFrame) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if frame.freq_blocks.len() != cfg.blocks {
        return Err(Error::LengthMismatch {
            expected: cfg.blocks,
            got: frame.freq_blocks.len(),
        });
    }
    let n = cfg.subcarriers;
    let ncp = cfg.cp_samples();
    let mut out = Vec::with_capacity(cfg.frame_samples());
    for block in &frame.freq_blocks {
        if block.len() != cfg.block_size {
            return Err(Error::LengthMismatch {
                expected: cfg.block_size,
                got: block.len(),
            });
        }
        let time = block_to_time(block, n);
        out.extend_from_slice(&time[n - ncp..]);
        out.extend_from_slice(&time);
    }
    Ok(out)
}

/// CP-OFDM comparator from raw bits.
pub fn modulate_ofdm_baseline(cfg: &FrameConfig, bits: &[u8]) -> Result<Vec<Complex64>> {
    modulate(cfg, &assemble_ofdm_frame(cfg, bits)?)
}

/// The N useful samples of block `m` (guard excluded for CP).
pub fn useful_samples<'a>(cfg: &FrameConfig, samples: &'a [Complex64], m: usize) -> &'a [Complex64] {
    let start = m * cfg.samples_per_block() + cfg.cp_samples();
    &samples[start..start + cfg.subcarriers]
}

/// Peak-to-average power ratio (linear) of one block.
pub fn papr(block: &[Complex64]) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::Empty("PAPR block"));
    }
    let powers = block.iter().map(|c| c.norm_sqr());
    let (peak, sum) = powers.fold((0.0f64, 0.0f64), |(p, s), x| (p.max(x), s + x));
    if sum == 0.0 {
        return Err(Error::Degenerate("PAPR of an all-zero block".into()));
    }
    Ok(peak * block.len() as f64 / sum)
}

/// PAPR of one frequency-domain block evaluated on a `factor`-times
/// oversampled time grid. Analog PAPR exceeds the Nyquist-rate value; this
/// approximates it.
pub fn papr_oversampled(freq: &[Complex64], subcarriers: usize, factor: usize) -> Result<f64> {
    if factor == 0 {
        return Err(Error::InvalidConfig("oversampling factor must be >= 1".into()));
    }
    papr(&block_to_time(freq, subcarriers * factor))
}

/// Per-sample RMS deviation of the last `K_GI` samples of each data block
/// from their across-block mean, relative to the block RMS amplitude.
///
/// Returns one value per tail sample position.
pub fn fgi_tail_deviation(cfg: &FrameConfig, samples: &[Complex64]) -> Result<Vec<f64>> {
    if cfg.guard != Guard::Fgi {
        return Err(Error::InvalidConfig("tail deviation is defined for FGI frames".into()));
    }
    let kgi = cfg.fgi_guard_samples();
    let n = cfg.subcarriers;
    let data = cfg.data_positions();
    if data.len() < 2 {
        return Err(Error::Degenerate("need at least two data blocks".into()));
    }
    let tails: Vec<&[Complex64]> = data
        .iter()
        .map(|&m| &useful_samples(cfg, samples, m)[n - kgi..])
        .collect();
    let rms = data
        .iter()
        .map(|&m| numerics::mean_power(useful_samples(cfg, samples, m)))
        .sum::<f64>()
        .sqrt()
        / (data.len() as f64).sqrt();
    Ok((0..kgi)
        .map(|i| {
            let mean = tails.iter().map(|t| t[i]).sum::<Complex64>() / tails.len() as f64;
            let var = tails.iter().map(|t| (t[i] - mean).norm_sqr()).sum::<f64>() / tails.len() as f64;
            var.sqrt() / rms
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cplx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_block_is_flat_and_deterministic() {
        let cfg = FrameConfig::cp(64, 32, 4, 2, 7.68e6);
        let p = build_reference_block(&cfg).unwrap();
        assert_eq!(p.len(), 32);
        // Brute-force DFT modulus check.
        let z = numerics::zadoff_chu(32, 1).unwrap();
        for k in 0..32 {
            let v: Complex64 = (0..32)
                .map(|n| z[n] * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * n) as f64 / 32.0))
                .sum::<Complex64>()
                / 32f64.sqrt();
            assert!((v.norm() - 1.0).abs() < 1e-9);
            assert!((v - p[k]).norm() < 1e-9);
        }
        assert_eq!(p, build_reference_block(&cfg).unwrap());
    }

    #[test]
    fn reference_block_length4() {
        let cfg = FrameConfig::cp(4, 4, 1, 1, 1.0);
        let p = build_reference_block(&cfg).unwrap();
        let e = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let expect = numerics::dft(&[cplx(1.0, 0.0), e, cplx(-1.0, 0.0), e]);
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn spreading_contract() {
        let c = cplx(0.5, -0.5);
        let out = spread_data_block(&[c; 16], 16).unwrap();
        assert!((out[0] - c * 4.0).norm() < 1e-12);
        assert!(out[1..].iter().all(|x| x.norm() < 1e-12));
        assert!(matches!(
            spread_data_block(&[c; 15], 16),
            Err(Error::LengthMismatch { expected: 16, got: 15 })
        ));
        let mut rng = RngStream::new(1, 1);
        let x = numerics::complex_gaussian(&mut rng, 32, 1.0).unwrap();
        let s = spread_data_block(&x, 32).unwrap();
        assert!((numerics::energy(&s) - numerics::energy(&x)).abs() < 1e-12);
        let back = numerics::idft(&s);
        assert!(back.iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn frame_layouts() {
        let cfg = FrameConfig::cp(8, 8, 4, 2, 1e6);
        assert_eq!(cfg.ref_positions(), vec![0, 2]);
        assert_eq!((cfg.reference_blocks(), cfg.data_blocks()), (2, 2));

        let cfg = FrameConfig::cp(8, 8, 10, 10, 1e6);
        assert_eq!(cfg.ref_positions(), vec![0]);
        assert_eq!(cfg.data_blocks(), 9);

        let cfg = FrameConfig::cp(8, 8, 3, 7, 1e6);
        assert_eq!(cfg.ref_positions(), vec![0]);

        let mut bad = FrameConfig::cp(8, 8, 3, 0, 1e6);
        assert!(bad.validate().is_err());
        bad.ref_spacing = 1;
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn assemble_places_reference_and_tail() {
        let cfg = FrameConfig::fgi(64, 32, 8, 6, 3, 7.68e6);
        let mut rng = RngStream::new(9, 0);
        let frame = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
        let p = reference_sequence(&cfg).unwrap();
        let pf = build_reference_block(&cfg).unwrap();
        for m in 0..cfg.blocks {
            if cfg.is_reference(m) {
                assert_eq!(frame.freq_blocks[m], pf);
            } else {
                assert_eq!(&frame.symbol_blocks[m][24..], &p[24..]);
                assert_eq!(frame.data_symbols(&cfg, m).len(), 24);
            }
        }
        assert!(matches!(
            assemble_frame(&cfg, &[0u8; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn identity_composition_when_l_equals_n() {
        let cfg = FrameConfig::cp(16, 16, 2, 2, 1e6);
        let mut rng = RngStream::new(2, 0);
        let frame = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
        let x = modulate(&cfg, &frame).unwrap();
        let useful = useful_samples(&cfg, &x, 1);
        for (a, b) in useful.iter().zip(&frame.symbol_blocks[1]) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_prefix_is_exact_copy() {
        let cfg = FrameConfig::cp(64, 32, 5, 2, 7.68e6);
        let ncp = cfg.cp_samples();
        let mut rng = RngStream::new(3, 0);
        for wf in [Waveform::SiDftsOfdm, Waveform::Ofdm] {
            let frame = random_frame(&cfg, wf, &mut rng).unwrap();
            let x = modulate(&cfg, &frame).unwrap();
            assert_eq!(x.len(), cfg.frame_samples());
            for m in 0..cfg.blocks {
                let b = &x[m * cfg.samples_per_block()..(m + 1) * cfg.samples_per_block()];
                assert_eq!(&b[..ncp], &b[64..64 + ncp]);
            }
        }
    }

    #[test]
    fn ofdm_single_subcarrier_is_complex_exponential() {
        let n = 32;
        let mut freq = vec![cplx(0.0, 0.0); 16];
        freq[3] = cplx(1.0, 0.0);
        let t = block_to_time(&freq, n);
        for (i, v) in t.iter().enumerate() {
            let expect = Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * std::f64::consts::PI * 3.0 * i as f64 / n as f64);
            assert!((v - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn ofdm_data_bins_are_unit_modulus() {
        let cfg = FrameConfig::cp(64, 32, 4, 4, 7.68e6);
        let mut rng = RngStream::new(4, 0);
        let frame = random_frame(&cfg, Waveform::Ofdm, &mut rng).unwrap();
        for m in cfg.data_positions() {
            assert!(frame.freq_blocks[m].iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
        }
        let fgi = FrameConfig::fgi(64, 32, 8, 4, 4, 7.68e6);
        assert!(assemble_ofdm_frame(&fgi, &vec![0; fgi.data_blocks() * 64]).is_err());
    }

    #[test]
    fn papr_contract() {
        assert!((papr(&[cplx(0.0, 1.0), cplx(1.0, 0.0), cplx(-0.6, 0.8)]).unwrap() - 1.0).abs() < 1e-12);
        let mut imp = vec![cplx(0.0, 0.0); 64];
        imp[0] = cplx(1.0, 0.0);
        assert!((papr(&imp).unwrap() - 64.0).abs() < 1e-12);
        assert!(papr(&[]).is_err());
        assert!(papr(&[cplx(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn oversampled_papr_not_below_nyquist() {
        let cfg = FrameConfig::cp(64, 32, 2, 2, 1e6);
        let mut rng = RngStream::new(5, 0);
        for _ in 0..50 {
            let frame = random_frame(&cfg, Waveform::Ofdm, &mut rng).unwrap();
            let x = block_to_time(&frame.freq_blocks[1], 64);
            let p1 = papr(&x).unwrap();
            let p4 = papr_oversampled(&frame.freq_blocks[1], 64, 4).unwrap();
            assert!(p4 >= p1 - 1e-9);
        }
    }

    fn mean_tail_deviation(k_p: usize, frames: usize) -> (Vec<f64>, Vec<f64>) {
        let cfg = FrameConfig::fgi(64, 32, k_p, 10, 10, 7.68e6);
        let mut rng = RngStream::new(6, k_p as u64);
        let mut acc = vec![0.0; cfg.fgi_guard_samples()];
        let mut max_dev: Vec<f64> = Vec::new();
        for _ in 0..frames {
            let frame = random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng).unwrap();
            let x = modulate(&cfg, &frame).unwrap();
            let dev = fgi_tail_deviation(&cfg, &x).unwrap();
            for (a, d) in acc.iter_mut().zip(&dev) {
                *a += d * d / frames as f64;
            }
            max_dev.push(dev.iter().cloned().fold(0.0, f64::max));
        }
        (acc.into_iter().map(f64::sqrt).collect(), max_dev)
    }

    #[test]
    fn fgi_tail_symbol_aligned_samples_are_constant() {
        // With N = 2L every other useful sample is a scaled pre-DFT symbol, so
        // the aligned tail samples equal the ZC tail exactly.
        let (dev, _) = mean_tail_deviation(8, 20);
        assert_eq!(dev.len(), 16);
        for i in (0..16).step_by(2) {
            assert!(dev[i] < 1e-12, "sample {i}: {}", dev[i]);
        }
    }

    #[test]
    fn fgi_tail_deviation_shrinks_with_longer_reference_tail() {
        let overall = |k_p| {
            let (dev, _) = mean_tail_deviation(k_p, 100);
            (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt()
        };
        let (a, b, c) = (overall(4), overall(8), overall(16));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    #[ignore = "interpolated tail samples next to the data symbols deviate by >0.1 RMS; see README"]
    fn fgi_tail_max_deviation_below_tenth_of_rms() {
        let (_, max_dev) = mean_tail_deviation(8, 100);
        let worst = max_dev.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 0.1, "worst {worst}");
    }
}
