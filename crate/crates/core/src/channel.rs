//! Communication and sensing channels: link budget, multipath with exact
//! per-sample Doppler, Wiener phase noise and AWGN.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numerics::{self, RngStream};
use crate::waveform::FrameConfig;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// One propagation path of the unified baseband channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSpec {
    /// Complex amplitude `h_l`.
    pub gain: Complex64,
    /// Delay `τ_l` in seconds.
    pub delay: f64,
    /// Doppler shift `ν_l` in Hz.
    pub doppler: f64,
}

impl PathSpec {
    pub fn new(gain: Complex64, delay: f64, doppler: f64) -> Self {
        Self { gain, delay, doppler }
    }

    pub fn unit() -> Self {
        Self::new(Complex64::new(1.0, 0.0), 0.0, 0.0)
    }
}

/// Ground truth attached to a realization, used for sensing labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    /// Target range (monostatic) or LoS path length (passive), meters.
    pub range_m: f64,
    pub velocity_mps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathSpec>,
    /// Per-sample SNR in dB; `f64::INFINITY` disables AWGN.
    pub snr_db: f64,
    /// Wiener phase-noise increment variance `σ_θ²` (rad² per sample).
    pub pn_variance: f64,
    pub targets: Vec<TargetTruth>,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathSpec>) -> Self {
        Self {
            paths,
            snr_db: f64::INFINITY,
            pn_variance: 0.0,
            targets: Vec::new(),
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn with_phase_noise(mut self, variance: f64) -> Self {
        self.pn_variance = variance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Empty("channel path list"));
        }
        if !(self.pn_variance >= 0.0) {
            return Err(Error::NegativeVariance(self.pn_variance));
        }
        for p in &self.paths {
            if !(p.delay >= 0.0) || !p.gain.norm().is_finite() || !p.doppler.is_finite() {
                return Err(Error::InvalidConfig(format!("invalid path {p:?}")));
            }
        }
        Ok(())
    }

    /// Largest path delay in seconds.
    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }

    /// Diagonal of the effective per-block channel at frame block `m`,
    /// subcarriers `0..L`. Exact for the ICI-free part under per-sample
    /// Doppler; reduces to `Σ h e^{j2πν m T_o} e^{-j2πnΔfτ}` without Doppler.
    pub fn block_cfr(&self, cfg: &FrameConfig, m: usize) -> Vec<Complex64> {
        let ts = cfg.sample_period();
        let n = cfg.subcarriers as f64;
        let start = m as f64 * cfg.block_duration() + cfg.cp_duration();
        let mut out = vec![Complex64::new(0.0, 0.0); cfg.block_size];
        for p in &self.paths {
            let doppler_avg = if p.doppler == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                (0..cfg.subcarriers)
                    .map(|i| Complex64::from_polar(1.0, 2.0 * PI * p.doppler * i as f64 * ts))
                    .sum::<Complex64>()
                    / n
            };
            let common = p.gain * Complex64::from_polar(1.0, 2.0 * PI * p.doppler * start) * doppler_avg;
            for (k, h) in out.iter_mut().enumerate() {
                *h += common * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * cfg.subcarrier_spacing * p.delay);
            }
        }
        out
    }
}

/// Link-budget constants for the path-gain formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmit power `P_t` (W).
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Molecular absorption coefficient `κ(f_c)` (1/m).
    pub absorption: f64,
    /// Carrier frequency (Hz).
    pub carrier: f64,
    /// Reflection coefficient `R_i` (linear amplitude).
    pub reflection: f64,
    /// Radar cross section `σ_p` (m²).
    pub rcs: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            tx_gain: 1.0,
            rx_gain: 1.0,
            absorption: 0.0,
            carrier: 0.3e12,
            reflection: 1.0,
            rcs: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Los,
    Nlos,
}

/// One-way communication link or two-way radar echo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    Comm,
    Sensing,
}

/// Received power `|α|²` of a LoS or NLoS communication ray.
pub fn comm_path_gain(budget: &LinkBudget, range_m: f64, kind: PathKind) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::NonPositiveRange(range_m));
    }
    let fspl = (SPEED_OF_LIGHT / (4.0 * PI * budget.carrier * range_m)).powi(2);
    let reflection = match kind {
        PathKind::Los => 1.0,
        PathKind::Nlos => budget.reflection * budget.reflection,
    };
    Ok(budget.tx_power * budget.tx_gain * budget.rx_gain * fspl * (-budget.absorption * range_m).exp() * reflection)
}

/// Received echo power `|α_p|²` from a point target (radar equation).
pub fn sensing_path_gain(budget: &LinkBudget, range_m: f64) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::NonPositiveRange(range_m));
    }
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    Ok(budget.tx_power * budget.tx_gain * budget.rx_gain * c2 * budget.rcs
        / ((4.0 * PI).powi(3) * budget.carrier.powi(2) * range_m.powi(4))
        * (-budget.absorption * range_m).exp())
}

/// `(delay, doppler)` from range and radial speed.
pub fn geometry_to_path(kind: Propagation, range_m: f64, speed_mps: f64, carrier: f64) -> (f64, f64) {
    let trips = match kind {
        Propagation::Comm => 1.0,
        Propagation::Sensing => 2.0,
    };
    (trips * range_m / SPEED_OF_LIGHT, trips * carrier * speed_mps / SPEED_OF_LIGHT)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChannelOptions {
    /// Apply Doppler as one phase per block, `e^{j2πν(mT_o + T_cp)}`,
    /// instead of exactly per sample.
    pub block_constant_doppler: bool,
}

/// Pass a modulated frame through the multipath channel (no noise).
pub fn apply_channel(cfg: &FrameConfig, realization: &ChannelRealization, samples: &[Complex64]) -> Result<Vec<Complex64>> {
    apply_channel_with(cfg, realization, samples, ChannelOptions::default())
}

/// [`apply_channel`] with explicit options.
///
/// Each block is treated as the rectangularly pulsed, band-limited
/// continuation of its useful part. A delayed sample whose source instant
/// falls before the block start is taken from the previous block(s).
pub fn apply_channel_with(
    cfg: &FrameConfig,
    realization: &ChannelRealization,
    samples: &[Complex64],
    opts: ChannelOptions,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    realization.validate()?;
    if samples.len() != cfg.frame_samples() {
        return Err(Error::LengthMismatch {
            expected: cfg.frame_samples(),
            got: samples.len(),
        });
    }
    let n = cfg.subcarriers;
    let ncp = cfg.cp_samples();
    let spb = cfg.samples_per_block();
    let ts = cfg.sample_period();
    let zero = Complex64::new(0.0, 0.0);

    let spectra: Vec<Vec<Complex64>> = (0..cfg.blocks)
        .map(|m| numerics::dft(&samples[m * spb + ncp..m * spb + ncp + n]))
        .collect();

    let mut out = vec![zero; samples.len()];
    let mut shifted: Vec<Vec<Complex64>> = vec![Vec::new(); cfg.blocks];
    for path in &realization.paths {
        let ramp: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * cfg.subcarrier_spacing * path.delay))
            .collect();
        for (m, spec) in spectra.iter().enumerate() {
            let mut buf: Vec<Complex64> = spec.iter().zip(&ramp).map(|(x, r)| x * r).collect();
            numerics::idft_in_place(&mut buf);
            shifted[m] = buf;
        }
        let delay_samples = path.delay / ts;
        for m in 0..cfg.blocks {
            for j in 0..spb {
                let u = j as f64 - delay_samples;
                let back = if u >= -1e-9 {
                    0
                } else {
                    ((-u - 1e-9) / spb as f64).ceil() as usize
                };
                if back > m {
                    continue;
                }
                let idx = (j as isize + (back * spb) as isize - ncp as isize).rem_euclid(n as isize) as usize;
                let v = shifted[m - back][idx];
                let s = m * spb + j;
                let phase = if path.doppler == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else if opts.block_constant_doppler {
                    Complex64::from_polar(1.0, 2.0 * PI * path.doppler * (m as f64 * cfg.block_duration() + cfg.cp_duration()))
                } else {
                    Complex64::from_polar(1.0, 2.0 * PI * path.doppler * s as f64 * ts)
                };
                out[s] += path.gain * phase * v;
            }
        }
    }
    Ok(out)
}

/// Multiply by `e^{jθ_i}` with a Wiener phase `θ_0 = 0, θ_i = θ_{i-1} + Δθ_i`,
/// `Δθ ~ N(0, σ_θ²)`, continuous over the whole input.
pub fn apply_phase_noise(samples: &[Complex64], variance: f64, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(samples.to_vec());
    }
    let steps = numerics::gaussian(rng, samples.len().saturating_sub(1), variance)?;
    let mut theta = 0.0;
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            theta += steps[i - 1];
        }
        out.push(s * Complex64::from_polar(1.0, theta));
    }
    Ok(out)
}

/// Add complex white Gaussian noise of the given total variance.
pub fn add_noise(samples: &mut [Complex64], variance: f64, rng: &mut RngStream) -> Result<()> {
    let noise = numerics::complex_gaussian(rng, samples.len(), variance)?;
    for (s, z) in samples.iter_mut().zip(noise) {
        *s += z;
    }
    Ok(())
}

/// Add AWGN at `snr_db` relative to the mean sample power of the input and
/// return the noise variance used. An infinite SNR leaves the input as is.
pub fn add_awgn(samples: &mut [Complex64], snr_db: f64, rng: &mut RngStream) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("AWGN input"));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    let variance = numerics::mean_power(samples) * numerics::db_to_linear(-snr_db);
    add_noise(samples, variance, rng)?;
    Ok(variance)
}

/// Full impairment chain: multipath, receiver phase noise, AWGN.
/// Returns the received samples and the AWGN variance.
pub fn transmit(
    cfg: &FrameConfig,
    realization: &ChannelRealization,
    samples: &[Complex64],
    rng: &mut RngStream,
) -> Result<(Vec<Complex64>, f64)> {
    let faded = apply_channel(cfg, realization, samples)?;
    let mut rx = apply_phase_noise(&faded, realization.pn_variance, rng)?;
    let var = add_awgn(&mut rx, realization.snr_db, rng)?;
    Ok((rx, var))
}

fn default_reflection_mean() -> f64 {
    -13.0
}

fn default_reflection_std() -> f64 {
    2.0
}

/// Random channel families used for training and Monte Carlo experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Scenario {
    /// One unit path without delay or Doppler.
    AwgnOnly,
    /// One monostatic echo, range uniform in `(0, c₀ T_g / 2]`.
    SingleTarget {
        #[serde(default)]
        max_speed_mps: f64,
    },
    /// `targets` echoes of equal power.
    MultiTarget {
        targets: usize,
        #[serde(default)]
        max_speed_mps: f64,
    },
    /// LoS ray plus `nlos` reflected rays, reflection loss in dB drawn from
    /// a Gaussian (default mean -13 dB, deviation 2 dB).
    MultipathComm {
        nlos: usize,
        #[serde(default)]
        max_speed_mps: f64,
        /// Draw the LoS delay in `(0, T_g]` instead of pinning it to zero.
        #[serde(default)]
        random_los_delay: bool,
        #[serde(default = "default_reflection_mean")]
        reflection_mean_db: f64,
        #[serde(default = "default_reflection_std")]
        reflection_std_db: f64,
    },
}

impl Scenario {
    pub fn multipath(nlos: usize) -> Self {
        Scenario::MultipathComm {
            nlos,
            max_speed_mps: 0.0,
            random_los_delay: false,
            reflection_mean_db: default_reflection_mean(),
            reflection_std_db: default_reflection_std(),
        }
    }

    /// Scenario range normalisation `r_max` for a frame.
    pub fn max_range(&self, cfg: &FrameConfig) -> f64 {
        match self {
            Scenario::MultipathComm { .. } | Scenario::AwgnOnly => SPEED_OF_LIGHT * cfg.guard_duration(),
            _ => SPEED_OF_LIGHT * cfg.guard_duration() / 2.0,
        }
    }

    pub fn max_speed(&self) -> f64 {
        match self {
            Scenario::AwgnOnly => 0.0,
            Scenario::SingleTarget { max_speed_mps }
            | Scenario::MultiTarget { max_speed_mps, .. }
            | Scenario::MultipathComm { max_speed_mps, .. } => *max_speed_mps,
        }
    }
}

/// Uniform draw in `(0, 1]`.
fn unit_open_closed(rng: &mut RngStream) -> f64 {
    1.0 - rng.random::<f64>()
}

fn random_phase(rng: &mut RngStream) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

fn random_speed(rng: &mut RngStream, max: f64) -> f64 {
    if max > 0.0 {
        max * (2.0 * rng.random::<f64>() - 1.0)
    } else {
        0.0
    }
}

/// Draw a channel realization with total mean path power 1 so that the SNR
/// is set only by [`add_awgn`]. SNR and phase noise are left at their
/// defaults (noiseless); set them on the returned value.
pub fn sample_training_channel(cfg: &FrameConfig, scenario: &Scenario, rng: &mut RngStream) -> Result<ChannelRealization> {
    cfg.validate()?;
    let guard = cfg.guard_duration();
    let fc = cfg.carrier;
    match scenario {
        Scenario::AwgnOnly => {
            let mut r = ChannelRealization::new(vec![PathSpec::unit()]);
            r.targets.push(TargetTruth {
                range_m: 0.0,
                velocity_mps: 0.0,
            });
            Ok(r)
        }
        Scenario::SingleTarget { max_speed_mps } | Scenario::MultiTarget { max_speed_mps, .. } => {
            let count = match scenario {
                Scenario::MultiTarget { targets, .. } => *targets,
                _ => 1,
            };
            if count == 0 || !(*max_speed_mps >= 0.0) {
                return Err(Error::InvalidConfig(format!("invalid scenario {scenario:?}")));
            }
            let amp = 1.0 / (count as f64).sqrt();
            let mut paths = Vec::with_capacity(count);
            let mut targets = Vec::with_capacity(count);
            for _ in 0..count {
                let range = SPEED_OF_LIGHT * guard / 2.0 * unit_open_closed(rng);
                let speed = random_speed(rng, *max_speed_mps);
                let (delay, doppler) = geometry_to_path(Propagation::Sensing, range, speed, fc);
                paths.push(PathSpec::new(random_phase(rng) * amp, delay, doppler));
                targets.push(TargetTruth {
                    range_m: range,
                    velocity_mps: speed,
                });
            }
            let mut r = ChannelRealization::new(paths);
            r.targets = targets;
            Ok(r)
        }
        Scenario::MultipathComm {
            nlos,
            max_speed_mps,
            random_los_delay,
            reflection_mean_db,
            reflection_std_db,
        } => {
            if !(*max_speed_mps >= 0.0) || !(*reflection_std_db >= 0.0) {
                return Err(Error::InvalidConfig(format!("invalid scenario {scenario:?}")));
            }
            let loss = Normal::new(*reflection_mean_db, *reflection_std_db)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let los_delay = if *random_los_delay {
                guard * unit_open_closed(rng)
            } else {
                0.0
            };
            let los_speed = random_speed(rng, *max_speed_mps);
            let (_, los_doppler) = geometry_to_path(Propagation::Comm, 0.0, los_speed, fc);
            let mut paths = vec![PathSpec::new(Complex64::new(1.0, 0.0), los_delay, los_doppler)];
            for _ in 0..*nlos {
                let power = numerics::db_to_linear(loss.sample(rng));
                let delay = los_delay + (guard - los_delay) * unit_open_closed(rng);
                let speed = random_speed(rng, *max_speed_mps);
                let (_, doppler) = geometry_to_path(Propagation::Comm, 0.0, speed, fc);
                paths.push(PathSpec::new(random_phase(rng) * power.sqrt(), delay, doppler));
            }
            let total: f64 = paths.iter().map(|p| p.gain.norm_sqr()).sum();
            for p in &mut paths {
                p.gain /= total.sqrt();
            }
            let mut r = ChannelRealization::new(paths);
            r.targets.push(TargetTruth {
                range_m: SPEED_OF_LIGHT * los_delay,
                velocity_mps: los_speed,
            });
            Ok(r)
        }
    }
}
