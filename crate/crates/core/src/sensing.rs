//! Range and velocity estimation from the sensing CFR: DFT periodograms,
//! MUSIC with forward-backward smoothing, the CFR correlation function and
//! Cramér-Rao bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics;
use crate::rx::{self, RxFrame};
use crate::waveform::{self, FrameConfig};
use crate::{Error, Result, SPEED_OF_LIGHT};

pub const DEFAULT_ZERO_PAD: usize = 16;

/// Where the sensing receiver sits relative to the transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SensingGeometry {
    /// Echo received next to the transmitter: `τ = 2r/c₀`, `ν = 2 f_c v/c₀`.
    #[default]
    Monostatic,
    /// Line-of-sight path observed at the communication receiver:
    /// `τ = r/c₀`, `ν = f_c v/c₀`.
    Passive,
}

impl SensingGeometry {
    /// Meters per second of delay.
    pub fn range_per_delay(self) -> f64 {
        match self {
            SensingGeometry::Monostatic => SPEED_OF_LIGHT / 2.0,
            SensingGeometry::Passive => SPEED_OF_LIGHT,
        }
    }

    /// Meters per second per Hz of Doppler at carrier `fc`.
    pub fn velocity_per_doppler(self, fc: f64) -> f64 {
        match self {
            SensingGeometry::Monostatic => SPEED_OF_LIGHT / (2.0 * fc),
            SensingGeometry::Passive => SPEED_OF_LIGHT / fc,
        }
    }
}

/// LS-estimated CFR at the reference blocks, `M_RB × L`.
#[derive(Clone, Debug)]
pub struct SensingCfrMatrix {
    pub values: Vec<Vec<Complex64>>,
    pub subcarrier_spacing: f64,
    /// Time between consecutive rows, `S_r T_o`.
    pub block_stride: f64,
    pub carrier: f64,
    pub geometry: SensingGeometry,
}

/// One detected target. Estimators along a single axis leave the other
/// field at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub peak_power: f64,
}

impl SensingCfrMatrix {
    pub fn new(
        values: Vec<Vec<Complex64>>,
        subcarrier_spacing: f64,
        block_stride: f64,
        carrier: f64,
        geometry: SensingGeometry,
    ) -> Result<Self> {
        let cols = values.first().map_or(0, Vec::len);
        if values.is_empty() || cols == 0 {
            return Err(Error::Empty("sensing CFR"));
        }
        if let Some(bad) = values.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        for (name, v) in [
            ("subcarrier spacing", subcarrier_spacing),
            ("block stride", block_stride),
            ("carrier", carrier),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            values,
            subcarrier_spacing,
            block_stride,
            carrier,
            geometry,
        })
    }

    /// LS estimate `Ĥ = Y_R / P` at every reference block of a received frame.
    pub fn from_rx(rx: &RxFrame, geometry: SensingGeometry) -> Result<Self> {
        let cfg = &rx.cfg;
        let reference = waveform::build_reference_block(cfg)?;
        let est = rx::ls_estimate(rx, &reference)?;
        Self::new(
            est.values,
            cfg.subcarrier_spacing,
            cfg.ref_spacing as f64 * cfg.block_duration(),
            cfg.carrier,
            geometry,
        )
    }

    /// Demap time-domain samples and estimate the sensing CFR.
    pub fn from_samples(cfg: &FrameConfig, samples: &[Complex64], geometry: SensingGeometry) -> Result<Self> {
        Self::from_rx(&rx::demap_to_freq(cfg, samples)?, geometry)
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values[0].len()
    }

    /// Keep only the subcarriers `cols`.
    pub fn select_subcarriers(&self, cols: std::ops::Range<usize>) -> Result<Self> {
        if cols.is_empty() || cols.end > self.cols() {
            return Err(Error::Shape(format!("subcarrier range {cols:?} outside 0..{}", self.cols())));
        }
        let values = self.values.iter().map(|r| r[cols.clone()].to_vec()).collect();
        Self::new(values, self.subcarrier_spacing, self.block_stride, self.carrier, self.geometry)
    }

    /// Keep only the first `rows` reference blocks.
    pub fn select_blocks(&self, rows: usize) -> Result<Self> {
        if rows == 0 || rows > self.rows() {
            return Err(Error::Shape(format!("cannot keep {rows} of {} rows", self.rows())));
        }
        Self::new(
            self.values[..rows].to_vec(),
            self.subcarrier_spacing,
            self.block_stride,
            self.carrier,
            self.geometry,
        )
    }

    /// Largest delay returned by the range estimators, `T/2`.
    pub fn max_delay(&self) -> f64 {
        0.5 / self.subcarrier_spacing
    }

    pub fn max_range(&self) -> f64 {
        self.geometry.range_per_delay() * self.max_delay()
    }

    /// Unambiguous Doppler half-width `1/(2 S_r T_o)`.
    pub fn max_doppler(&self) -> f64 {
        0.5 / self.block_stride
    }

    pub fn max_velocity(&self) -> f64 {
        self.geometry.velocity_per_doppler(self.carrier) * self.max_doppler()
    }

    fn delay_to_range(&self, tau: f64) -> f64 {
        self.geometry.range_per_delay() * tau
    }

    fn doppler_to_velocity(&self, nu: f64) -> f64 {
        self.geometry.velocity_per_doppler(self.carrier) * nu
    }
}

/// Sample correlation `R_H(Δm, Δn)`: the mean of `Ĥ*_{m−Δm,n} Ĥ_{m,n+Δn}`
/// over all index pairs inside the matrix.
pub fn correlation_function(cfr: &SensingCfrMatrix, dm: isize, dn: isize) -> Result<Complex64> {
    let (rows, cols) = (cfr.rows() as isize, cfr.cols() as isize);
    if dm.abs() >= rows || dn.abs() >= cols {
        return Err(Error::LagOutOfRange { dm, dn });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for m in dm.max(0)..rows.min(rows + dm) {
        let a = &cfr.values[(m - dm) as usize];
        let b = &cfr.values[m as usize];
        for n in (-dn).max(0)..cols.min(cols - dn) {
            acc += a[n as usize].conj() * b[(n + dn) as usize];
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Non-coherent delay periodogram on the `L·pad` grid `τ_k = k/(L·pad·Δf)`,
/// normalized so that a noiseless unit target peaks at 1.
pub fn range_periodogram(cfr: &SensingCfrMatrix, zero_pad: usize) -> Result<Vec<f64>> {
    if zero_pad == 0 {
        return Err(Error::InvalidConfig("zero-pad factor must be at least 1".into()));
    }
    let l = cfr.cols();
    let len = l * zero_pad;
    let scale = (len as f64).sqrt() / l as f64;
    let mut spec = vec![0.0; len];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for row in &cfr.values {
        buf.fill(Complex64::new(0.0, 0.0));
        buf[..l].copy_from_slice(row);
        numerics::idft_in_place(&mut buf);
        for (s, v) in spec.iter_mut().zip(&buf) {
            *s += (v * scale).norm_sqr();
        }
    }
    let rows = cfr.rows() as f64;
    spec.iter_mut().for_each(|s| *s /= rows);
    Ok(spec)
}

/// Non-coherent Doppler periodogram on the `M_RB·pad` grid; bin `k` maps to
/// `k/(M_RB·pad·S_r T_o)`, wrapped to the symmetric interval.
pub fn velocity_periodogram(cfr: &SensingCfrMatrix, zero_pad: usize) -> Result<Vec<f64>> {
    if zero_pad == 0 {
        return Err(Error::InvalidConfig("zero-pad factor must be at least 1".into()));
    }
    let m = cfr.rows();
    if m < 2 {
        return Err(Error::Degenerate("velocity estimation needs at least two reference blocks".into()));
    }
    let len = m * zero_pad;
    let scale = (len as f64).sqrt() / m as f64;
    let mut spec = vec![0.0; len];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for n in 0..cfr.cols() {
        buf.fill(Complex64::new(0.0, 0.0));
        for (b, row) in buf.iter_mut().zip(&cfr.values) {
            *b = row[n];
        }
        numerics::dft_in_place(&mut buf);
        for (s, v) in spec.iter_mut().zip(&buf) {
            *s += (v * scale).norm_sqr();
        }
    }
    let cols = cfr.cols() as f64;
    spec.iter_mut().for_each(|s| *s /= cols);
    Ok(spec)
}

/// Sub-bin offset in `[-0.5, 0.5]` of a parabola through the log powers.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let ln = |x: f64| x.max(f64::MIN_POSITIVE).ln();
    let (a, b, c) = (ln(left), ln(center), ln(right));
    let denom = a - 2.0 * b + c;
    if !(denom < 0.0) {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Indices in `candidates` that are local maxima of the circular `spec`,
/// strongest first, at most `count`.
fn pick_peaks(spec: &[f64], candidates: impl Iterator<Item = usize>, count: usize) -> Vec<usize> {
    let len = spec.len();
    let mut peaks: Vec<usize> = candidates
        .filter(|&k| {
            let l = spec[(k + len - 1) % len];
            let r = spec[(k + 1) % len];
            spec[k] >= l && spec[k] > r
        })
        .collect();
    peaks.sort_by(|&a, &b| spec[b].total_cmp(&spec[a]));
    peaks.truncate(count);
    peaks
}

fn refined_bin(spec: &[f64], k: usize) -> f64 {
    let len = spec.len();
    k as f64 + parabolic_offset(spec[(k + len - 1) % len], spec[k], spec[(k + 1) % len])
}

/// Periodogram range estimates of the `targets` strongest peaks with delay
/// in `[0, T/2]`, sorted by range.
pub fn estimate_range_periodogram(cfr: &SensingCfrMatrix, zero_pad: usize, targets: usize) -> Result<Vec<TargetEstimate>> {
    let spec = range_periodogram(cfr, zero_pad)?;
    let len = spec.len();
    let step = 1.0 / (len as f64 * cfr.subcarrier_spacing);
    let mut out: Vec<TargetEstimate> = pick_peaks(&spec, 0..=len / 2, targets)
        .into_iter()
        .map(|k| {
            let tau = (refined_bin(&spec, k) * step).clamp(0.0, cfr.max_delay());
            TargetEstimate {
                range_m: cfr.delay_to_range(tau),
                velocity_mps: 0.0,
                peak_power: spec[k],
            }
        })
        .collect();
    out.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    Ok(out)
}

fn wrap_bin(x: f64, len: usize) -> f64 {
    let half = len as f64 / 2.0;
    let y = x.rem_euclid(len as f64);
    if y >= half {
        y - len as f64
    } else {
        y
    }
}

/// Periodogram velocity estimates of the `targets` strongest Doppler peaks,
/// sorted by velocity.
pub fn estimate_velocity_periodogram(
    cfr: &SensingCfrMatrix,
    zero_pad: usize,
    targets: usize,
) -> Result<Vec<TargetEstimate>> {
    let spec = velocity_periodogram(cfr, zero_pad)?;
    let len = spec.len();
    let step = 1.0 / (len as f64 * cfr.block_stride);
    let mut out: Vec<TargetEstimate> = pick_peaks(&spec, 0..len, targets)
        .into_iter()
        .map(|k| {
            let nu = (wrap_bin(refined_bin(&spec, k), len) * step).clamp(-cfr.max_doppler(), cfr.max_doppler());
            TargetEstimate {
                range_m: 0.0,
                velocity_mps: cfr.doppler_to_velocity(nu),
                peak_power: spec[k],
            }
        })
        .collect();
    out.sort_by(|a, b| a.velocity_mps.total_cmp(&b.velocity_mps));
    Ok(out)
}

/// Joint delay-Doppler periodogram: delay IDFT along each row, Doppler DFT
/// along each delay bin. Returns the `targets` strongest 2D peaks.
pub fn estimate_joint_periodogram(
    cfr: &SensingCfrMatrix,
    zero_pad_range: usize,
    zero_pad_velocity: usize,
    targets: usize,
) -> Result<Vec<TargetEstimate>> {
    if zero_pad_range == 0 || zero_pad_velocity == 0 {
        return Err(Error::InvalidConfig("zero-pad factor must be at least 1".into()));
    }
    let (m, l) = (cfr.rows(), cfr.cols());
    let (lr, lv) = (l * zero_pad_range, m * zero_pad_velocity);
    let scale = (lr as f64 * lv as f64).sqrt() / (l * m) as f64;
    let mut grid = vec![vec![Complex64::new(0.0, 0.0); lr]; lv];
    for (row, out) in cfr.values.iter().zip(grid.iter_mut()) {
        out[..l].copy_from_slice(row);
        numerics::idft_in_place(out);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); lv];
    let mut power = vec![vec![0.0; lr]; lv];
    for k in 0..lr {
        for (c, g) in col.iter_mut().zip(&grid) {
            *c = g[k];
        }
        numerics::dft_in_place(&mut col);
        for (p, c) in power.iter_mut().zip(&col) {
            p[k] = (c * scale).norm_sqr();
        }
    }
    let at = |i: isize, k: isize| power[i.rem_euclid(lv as isize) as usize][k.rem_euclid(lr as isize) as usize];
    let mut peaks = Vec::new();
    for i in 0..lv as isize {
        for k in 0..=(lr / 2) as isize {
            let c = at(i, k);
            let is_max = (-1..=1)
                .flat_map(|di| (-1..=1).map(move |dk| (di, dk)))
                .filter(|&d| d != (0, 0))
                .all(|(di, dk)| c >= at(i + di, k + dk));
            if is_max && c > 0.0 {
                peaks.push((i, k, c));
            }
        }
    }
    peaks.sort_by(|a, b| b.2.total_cmp(&a.2));
    peaks.truncate(targets);
    let dstep = 1.0 / (lr as f64 * cfr.subcarrier_spacing);
    let vstep = 1.0 / (lv as f64 * cfr.block_stride);
    let mut out: Vec<TargetEstimate> = peaks
        .into_iter()
        .map(|(i, k, c)| {
            let kk = k as f64 + parabolic_offset(at(i, k - 1), c, at(i, k + 1));
            let ii = i as f64 + parabolic_offset(at(i - 1, k), c, at(i + 1, k));
            TargetEstimate {
                range_m: cfr.delay_to_range((kk * dstep).clamp(0.0, cfr.max_delay())),
                velocity_mps: cfr.doppler_to_velocity((wrap_bin(ii, lv) * vstep).clamp(-cfr.max_doppler(), cfr.max_doppler())),
                peak_power: c,
            }
        })
        .collect();
    out.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    Ok(out)
}

/// MUSIC search grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MusicGrid {
    /// Grid points over the search interval.
    pub points: usize,
    /// Subarray length; `None` picks half the aperture.
    pub window: Option<usize>,
}

impl Default for MusicGrid {
    fn default() -> Self {
        Self {
            points: 4096,
            window: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MusicResult {
    pub estimates: Vec<TargetEstimate>,
    /// Delay (s) or Doppler (Hz) of each grid point.
    pub grid: Vec<f64>,
    pub pseudospectrum: Vec<f64>,
}

/// Forward-backward smoothed covariance of all length-`window` subarrays of
/// the given snapshot sequences.
fn smoothed_covariance(sequences: &[Vec<Complex64>], window: usize) -> DMatrix<Complex64> {
    let mut r = DMatrix::<Complex64>::zeros(window, window);
    let mut count = 0usize;
    for seq in sequences {
        for start in 0..=seq.len() - window {
            let x = DVector::from_column_slice(&seq[start..start + window]);
            r += &x * x.adjoint();
            count += 1;
        }
    }
    r /= Complex64::new(count as f64, 0.0);
    // Backward part J R* J.
    let back = DMatrix::from_fn(window, window, |i, j| r[(window - 1 - i, window - 1 - j)].conj());
    (r + back) * Complex64::new(0.5, 0.0)
}

/// Noise-subspace basis: eigenvectors of the `window − order` smallest
/// eigenvalues of the regularized covariance.
fn noise_subspace(mut r: DMatrix<Complex64>, order: usize) -> DMatrix<Complex64> {
    let w = r.nrows();
    let eps = 1e-10 * r.trace().re.max(f64::MIN_POSITIVE);
    for i in 0..w {
        r[(i, i)] += eps;
    }
    let eig = SymmetricEigen::new(r);
    let mut idx: Vec<usize> = (0..w).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cols: Vec<_> = idx[..w - order].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

/// `1/‖E_nᴴ a(θ)‖²` with `a_k = e^{j sign 2π k θ step}`.
fn pseudospectrum(en: &DMatrix<Complex64>, grid: &[f64], step: f64, sign: f64) -> Vec<f64> {
    let w = en.nrows();
    let enh = en.adjoint();
    grid.iter()
        .map(|&g| {
            let a = DVector::from_fn(w, |k, _| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 * g * step));
            let proj = &enh * a;
            1.0 / proj.norm_squared().max(f64::MIN_POSITIVE)
        })
        .collect()
}

fn music_window(grid: &MusicGrid, aperture: usize, order: usize) -> Result<usize> {
    let window = grid.window.unwrap_or(aperture / 2);
    if order == 0 {
        return Err(Error::InvalidConfig("MUSIC model order must be at least 1".into()));
    }
    if window <= order || window > aperture {
        return Err(Error::InvalidConfig(format!(
            "MUSIC needs order {order} < window {window} <= aperture {aperture}"
        )));
    }
    if grid.points < 3 {
        return Err(Error::InvalidConfig("MUSIC grid needs at least 3 points".into()));
    }
    Ok(window)
}

fn music_peaks(spec: &[f64], order: usize) -> Vec<(f64, usize)> {
    // Linear grid: the ends have one neighbor only.
    let n = spec.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let l = if k > 0 { spec[k - 1] } else { f64::NEG_INFINITY };
            let r = if k + 1 < n { spec[k + 1] } else { f64::NEG_INFINITY };
            spec[k] >= l && spec[k] > r
        })
        .collect();
    peaks.sort_by(|&a, &b| spec[b].total_cmp(&spec[a]));
    peaks.truncate(order);
    peaks
        .into_iter()
        .map(|k| {
            let off = if k > 0 && k + 1 < n {
                parabolic_offset(spec[k - 1], spec[k], spec[k + 1])
            } else {
                0.0
            };
            (k as f64 + off, k)
        })
        .collect()
}

/// MUSIC delay search over `[0, T/2]` using subcarrier subarrays of every row.
pub fn music_range(cfr: &SensingCfrMatrix, order: usize, grid: &MusicGrid) -> Result<MusicResult> {
    let window = music_window(grid, cfr.cols(), order)?;
    let en = noise_subspace(smoothed_covariance(&cfr.values, window), order);
    let dt = cfr.max_delay() / (grid.points - 1) as f64;
    let taus: Vec<f64> = (0..grid.points).map(|i| i as f64 * dt).collect();
    let spec = pseudospectrum(&en, &taus, cfr.subcarrier_spacing, -1.0);
    let mut estimates: Vec<TargetEstimate> = music_peaks(&spec, order)
        .into_iter()
        .map(|(x, k)| TargetEstimate {
            range_m: cfr.delay_to_range((x * dt).clamp(0.0, cfr.max_delay())),
            velocity_mps: 0.0,
            peak_power: spec[k],
        })
        .collect();
    estimates.sort_by(|a, b| a.range_m.total_cmp(&b.range_m));
    Ok(MusicResult {
        estimates,
        grid: taus,
        pseudospectrum: spec,
    })
}

/// MUSIC Doppler search over `[-1/(2 S_r T_o), 1/(2 S_r T_o)]` using
/// block-axis subarrays of every subcarrier.
pub fn music_velocity(cfr: &SensingCfrMatrix, order: usize, grid: &MusicGrid) -> Result<MusicResult> {
    if cfr.rows() < 2 {
        return Err(Error::Degenerate("velocity estimation needs at least two reference blocks".into()));
    }
    let window = music_window(grid, cfr.rows(), order)?;
    let columns: Vec<Vec<Complex64>> = (0..cfr.cols()).map(|n| cfr.values.iter().map(|r| r[n]).collect()).collect();
    let en = noise_subspace(smoothed_covariance(&columns, window), order);
    let nu_max = cfr.max_doppler();
    let dn = 2.0 * nu_max / (grid.points - 1) as f64;
    let nus: Vec<f64> = (0..grid.points).map(|i| -nu_max + i as f64 * dn).collect();
    let spec = pseudospectrum(&en, &nus, cfr.block_stride, 1.0);
    let mut estimates: Vec<TargetEstimate> = music_peaks(&spec, order)
        .into_iter()
        .map(|(x, k)| TargetEstimate {
            range_m: 0.0,
            velocity_mps: cfr.doppler_to_velocity((-nu_max + x * dn).clamp(-nu_max, nu_max)),
            peak_power: spec[k],
        })
        .collect();
    estimates.sort_by(|a, b| a.velocity_mps.total_cmp(&b.velocity_mps));
    Ok(MusicResult {
        estimates,
        grid: nus,
        pseudospectrum: spec,
    })
}

fn check_snr(snr_linear: f64) -> Result<()> {
    if !(snr_linear > 0.0 && snr_linear.is_finite()) {
        return Err(Error::Degenerate(format!("SNR must be positive and finite, got {snr_linear}")));
    }
    Ok(())
}

/// Monostatic single-target range variance bound (m²) for `subcarriers`
/// subcarriers and `blocks` reference blocks at per-element CFR SNR
/// `snr_linear`. Passive sensing doubles the range per delay, so its bound
/// is four times larger.
pub fn crlb_range(snr_linear: f64, subcarriers: usize, blocks: usize, subcarrier_spacing: f64) -> Result<f64> {
    check_snr(snr_linear)?;
    if subcarriers < 2 || blocks == 0 {
        return Err(Error::Degenerate(format!(
            "range bound needs K >= 2 and M_RB >= 1, got K={subcarriers}, M_RB={blocks}"
        )));
    }
    let k = subcarriers as f64;
    let scale = SPEED_OF_LIGHT / (4.0 * PI * subcarrier_spacing);
    Ok(6.0 / (snr_linear * (k * k - 1.0) * k * blocks as f64) * scale * scale)
}

/// Monostatic single-target velocity variance bound ((m/s)²).
pub fn crlb_velocity(
    snr_linear: f64,
    subcarriers: usize,
    blocks: usize,
    ref_spacing: usize,
    block_duration: f64,
    carrier: f64,
) -> Result<f64> {
    check_snr(snr_linear)?;
    if blocks < 2 || subcarriers == 0 {
        return Err(Error::Degenerate(format!(
            "velocity bound needs M_RB >= 2 and K >= 1, got K={subcarriers}, M_RB={blocks}"
        )));
    }
    let m = blocks as f64;
    let scale = SPEED_OF_LIGHT / (4.0 * PI * ref_spacing as f64 * block_duration * carrier);
    Ok(6.0 / (snr_linear * (m * m - 1.0) * m * subcarriers as f64) * scale * scale)
}

/// Geometry-aware range bound.
pub fn crlb_range_for(geometry: SensingGeometry, snr_linear: f64, subcarriers: usize, blocks: usize, df: f64) -> Result<f64> {
    let base = crlb_range(snr_linear, subcarriers, blocks, df)?;
    Ok(match geometry {
        SensingGeometry::Monostatic => base,
        SensingGeometry::Passive => 4.0 * base,
    })
}

/// Geometry-aware velocity bound.
pub fn crlb_velocity_for(
    geometry: SensingGeometry,
    snr_linear: f64,
    subcarriers: usize,
    blocks: usize,
    ref_spacing: usize,
    block_duration: f64,
    carrier: f64,
) -> Result<f64> {
    let base = crlb_velocity(snr_linear, subcarriers, blocks, ref_spacing, block_duration, carrier)?;
    Ok(match geometry {
        SensingGeometry::Monostatic => base,
        SensingGeometry::Passive => 4.0 * base,
    })
}
