//! Training-set generation and the on-disk dataset format: one JSON header
//! line followed by fixed-stride rows of little-endian `f32` features, then
//! communication labels, then sensing labels.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::MlpModel;
use super::receiver;
use crate::channel::{self, ChannelRealization, Scenario};
use crate::numerics::RngStream;
use crate::rx::{self, RxFrame};
use crate::waveform::{self, FrameConfig, TxFrame, Waveform};
use crate::{Error, Result};

pub const DATASET_SCHEMA: &str = "thz-isac-dataset/1";

/// Sample layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    /// One data block plus its preceding reference block (time-invariant
    /// channels): features `[Y_D, P̃_R]`, labels `x_D` and `r/r_max`.
    Level2Simplified,
    /// One subcarrier across all reference blocks: features `P̃_{m,n}`,
    /// labels the true CFR at the data blocks (divided by `h_scale`) and
    /// `v/v_max`.
    Level1,
    /// One data block plus the level-1 CFR estimate at that block:
    /// features `[Y_D, Ĥ_D]`, labels `x_D` and `r/r_max`.
    Level2,
    /// One reference block only, label `r/r_max`.
    RangeOnly,
    /// One subcarrier across all reference blocks, label `v/v_max`.
    VelocityOnly,
}

/// Phase-noise augmentation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum PhaseNoise {
    #[default]
    None,
    Fixed { variance: f64 },
    /// `σ_θ²` log-uniform in `[low, high]`.
    LogUniform { low: f64, high: f64 },
}

impl PhaseNoise {
    fn draw(&self, rng: &mut RngStream) -> Result<f64> {
        match *self {
            PhaseNoise::None => Ok(0.0),
            PhaseNoise::Fixed { variance } if variance >= 0.0 => Ok(variance),
            PhaseNoise::LogUniform { low, high } if low > 0.0 && high >= low => {
                let (a, b) = (low.ln(), high.ln());
                Ok((a + (b - a) * rng.random::<f64>()).exp())
            }
            other => Err(Error::InvalidConfig(format!("invalid phase-noise setting {other:?}"))),
        }
    }
}

/// What to simulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub frame: FrameConfig,
    pub scenario: Scenario,
    /// Number of samples (rows).
    pub size: usize,
    /// SNR values in dB; each frame draws one uniformly.
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub phase_noise: PhaseNoise,
    /// Fraction of rows held out for testing (the last rows).
    pub test_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: String,
    pub kind: DatasetKind,
    pub features: usize,
    pub comm: usize,
    pub sense: usize,
    pub count: usize,
    /// Rows `0..train` are the training split.
    pub train: usize,
    pub r_max: f64,
    pub v_max: f64,
    /// CFR label divisor (level 1); 1 otherwise.
    pub h_scale: f64,
    pub seed: u64,
    pub frame: FrameConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub features: Array2<f32>,
    pub comm: Array2<f32>,
    pub sense: Array2<f32>,
}

/// One transmitted and received frame with its ground truth.
#[derive(Clone, Debug)]
pub struct SimulatedFrame {
    pub tx: TxFrame,
    pub channel: ChannelRealization,
    pub rx: RxFrame,
    pub noise_variance: f64,
}

/// Transmit a random SI-DFT-s-OFDM frame through one channel draw.
pub fn simulate_frame(
    cfg: &FrameConfig,
    scenario: &Scenario,
    snr_db: f64,
    pn_variance: f64,
    rng: &mut RngStream,
) -> Result<SimulatedFrame> {
    let tx = waveform::random_frame(cfg, Waveform::SiDftsOfdm, rng)?;
    let x = waveform::modulate(cfg, &tx)?;
    let channel = channel::sample_training_channel(cfg, scenario, rng)?
        .with_snr_db(snr_db)
        .with_phase_noise(pn_variance);
    let (y, noise_variance) = channel::transmit(cfg, &channel, &x, rng)?;
    Ok(SimulatedFrame {
        rx: rx::demap_to_freq(cfg, &y)?,
        tx,
        channel,
        noise_variance,
    })
}

fn push_complex(out: &mut Vec<f32>, v: &[Complex64]) {
    for c in v {
        out.push(c.re as f32);
        out.push(c.im as f32);
    }
}

/// Index of the reference block paired with data block `m`.
pub fn paired_reference(cfg: &FrameConfig, m: usize) -> usize {
    cfg.ref_spacing * (m / cfg.ref_spacing)
}

/// Feature row `[Y_D, P̃_R]` for data block `m`.
pub fn level2_features(rx: &RxFrame, m: usize) -> Vec<f32> {
    let mut row = Vec::with_capacity(4 * rx.cfg.block_size);
    push_complex(&mut row, &rx.blocks[m]);
    push_complex(&mut row, &rx.blocks[paired_reference(&rx.cfg, m)]);
    row
}

/// Received reference symbols along subcarrier `n`.
pub fn subcarrier_features(rx: &RxFrame, n: usize) -> Vec<f32> {
    let mut row = Vec::with_capacity(2 * rx.ref_positions.len());
    for &m in &rx.ref_positions {
        push_complex(&mut row, &[rx.blocks[m][n]]);
    }
    row
}

/// Interleaved data symbols of block `m`.
pub fn symbol_labels(cfg: &FrameConfig, tx: &TxFrame, m: usize) -> Vec<f32> {
    let mut row = Vec::with_capacity(2 * cfg.data_symbols());
    push_complex(&mut row, tx.data_symbols(cfg, m));
    row
}

struct Rows {
    features: Vec<f32>,
    comm: Vec<f32>,
    sense: Vec<f32>,
}

pub(crate) fn widths(kind: DatasetKind, cfg: &FrameConfig) -> (usize, usize, usize) {
    let l = cfg.block_size;
    match kind {
        DatasetKind::Level2Simplified | DatasetKind::Level2 => (4 * l, 2 * cfg.data_symbols(), 1),
        DatasetKind::Level1 => (2 * cfg.reference_blocks(), 2 * cfg.data_blocks(), 1),
        DatasetKind::RangeOnly => (2 * l, 0, 1),
        DatasetKind::VelocityOnly => (2 * cfg.reference_blocks(), 0, 1),
    }
}

fn rows_per_frame(kind: DatasetKind, cfg: &FrameConfig) -> usize {
    match kind {
        DatasetKind::Level2Simplified | DatasetKind::Level2 => cfg.data_blocks(),
        DatasetKind::Level1 | DatasetKind::VelocityOnly => cfg.block_size,
        DatasetKind::RangeOnly => cfg.reference_blocks(),
    }
}

fn frame_rows(spec: &DatasetSpec, sim: &SimulatedFrame, r_max: f64, v_max: f64, level1: Option<&Level1>) -> Result<Rows> {
    let cfg = &spec.frame;
    let truth = sim.channel.targets.first().copied().unwrap_or(channel::TargetTruth {
        range_m: 0.0,
        velocity_mps: 0.0,
    });
    let r = (truth.range_m / r_max) as f32;
    let v = if v_max > 0.0 { (truth.velocity_mps / v_max) as f32 } else { 0.0 };
    let mut out = Rows {
        features: Vec::new(),
        comm: Vec::new(),
        sense: Vec::new(),
    };
    match spec.kind {
        DatasetKind::Level2Simplified => {
            for m in cfg.data_positions() {
                out.features.extend(level2_features(&sim.rx, m));
                out.comm.extend(symbol_labels(cfg, &sim.tx, m));
                out.sense.push(r);
            }
        }
        DatasetKind::Level2 => {
            let l1 = level1.ok_or_else(|| Error::InvalidConfig("level-2 samples need a level-1 model".into()))?;
            let (cfr, _) = receiver::level1_estimate(&sim.rx, l1.model, l1.h_scale)?;
            for (d, m) in cfg.data_positions().into_iter().enumerate() {
                push_complex(&mut out.features, &sim.rx.blocks[m]);
                push_complex(&mut out.features, &cfr[d]);
                out.comm.extend(symbol_labels(cfg, &sim.tx, m));
                out.sense.push(r);
            }
        }
        DatasetKind::Level1 => {
            let cfr: Vec<Vec<Complex64>> = cfg.data_positions().iter().map(|&m| sim.channel.block_cfr(cfg, m)).collect();
            for n in 0..cfg.block_size {
                out.features.extend(subcarrier_features(&sim.rx, n));
                for row in &cfr {
                    push_complex(&mut out.comm, &[row[n]]);
                }
                out.sense.push(v);
            }
        }
        DatasetKind::RangeOnly => {
            for &m in &sim.rx.ref_positions {
                push_complex(&mut out.features, &sim.rx.blocks[m]);
                out.sense.push(r);
            }
        }
        DatasetKind::VelocityOnly => {
            for n in 0..cfg.block_size {
                out.features.extend(subcarrier_features(&sim.rx, n));
                out.sense.push(v);
            }
        }
    }
    Ok(out)
}

/// Trained level-1 network and its CFR label scale.
#[derive(Clone, Copy, Debug)]
pub struct Level1<'a> {
    pub model: &'a MlpModel<f32>,
    pub h_scale: f64,
}

/// Run the full transmit/channel/receive chain frame by frame until `size`
/// rows exist. Frame `i` uses the stream `fork(i)` of the seed, so the
/// result does not depend on the thread count.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    generate_dataset_with(spec, seed, None)
}

/// [`generate_dataset`] with the level-1 model required by
/// [`DatasetKind::Level2`].
pub fn generate_dataset_with(spec: &DatasetSpec, seed: u64, level1: Option<Level1>) -> Result<Dataset> {
    if spec.size == 0 {
        return Err(Error::InvalidConfig("dataset size must be at least 1".into()));
    }
    if spec.snr_db.is_empty() {
        return Err(Error::InvalidConfig("dataset needs at least one SNR value".into()));
    }
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::InvalidConfig(format!("test fraction {} outside [0, 1)", spec.test_fraction)));
    }
    let cfg = &spec.frame;
    cfg.validate()?;
    let per_frame = rows_per_frame(spec.kind, cfg);
    if per_frame == 0 {
        return Err(Error::InvalidConfig(format!("{:?} needs data blocks in the frame", spec.kind)));
    }
    if matches!(spec.kind, DatasetKind::Level1 | DatasetKind::VelocityOnly) && cfg.reference_blocks() < 2 {
        return Err(Error::InvalidConfig("velocity labels need at least two reference blocks".into()));
    }
    let r_max = spec.scenario.max_range(cfg);
    let v_max = spec.scenario.max_speed();
    let frames = spec.size.div_ceil(per_frame);
    let root = RngStream::new(seed, 0x0da7a);
    let per: Vec<Rows> = (0..frames)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.fork(i as u64);
            let snr = spec.snr_db[rng.random_range(0..spec.snr_db.len())];
            let pn = spec.phase_noise.draw(&mut rng)?;
            let sim = simulate_frame(cfg, &spec.scenario, snr, pn, &mut rng)?;
            frame_rows(spec, &sim, r_max, v_max, level1.as_ref())
        })
        .collect::<Result<_>>()?;
    let (fw, cw, sw) = widths(spec.kind, cfg);
    let mut features = Vec::with_capacity(spec.size * fw);
    let mut comm = Vec::with_capacity(spec.size * cw);
    let mut sense = Vec::with_capacity(spec.size * sw);
    for r in per {
        features.extend(r.features);
        comm.extend(r.comm);
        sense.extend(r.sense);
    }
    features.truncate(spec.size * fw);
    comm.truncate(spec.size * cw);
    sense.truncate(spec.size * sw);
    let train = spec.size - (spec.size as f64 * spec.test_fraction).round() as usize;
    let mut comm = Array2::from_shape_vec((spec.size, cw), comm).map_err(|e| Error::Shape(e.to_string()))?;
    let mut h_scale = 1.0;
    if spec.kind == DatasetKind::Level1 {
        let mut max = 0.0f64;
        for row in comm.slice(s![..train, ..]).rows() {
            for j in (0..cw).step_by(2) {
                max = max.max((row[j] as f64).hypot(row[j + 1] as f64));
            }
        }
        if max > 0.0 {
            h_scale = max;
            comm.mapv_inplace(|v| (v as f64 / h_scale) as f32);
        }
    }
    Ok(Dataset {
        header: DatasetHeader {
            schema: DATASET_SCHEMA.into(),
            kind: spec.kind,
            features: fw,
            comm: cw,
            sense: sw,
            count: spec.size,
            train,
            r_max,
            v_max,
            h_scale,
            seed,
            frame: cfg.clone(),
        },
        features: Array2::from_shape_vec((spec.size, fw), features).map_err(|e| Error::Shape(e.to_string()))?,
        comm,
        sense: Array2::from_shape_vec((spec.size, sw), sense).map_err(|e| Error::Shape(e.to_string()))?,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.header.count
    }

    pub fn is_empty(&self) -> bool {
        self.header.count == 0
    }

    pub fn train_rows(&self) -> Range<usize> {
        0..self.header.train
    }

    pub fn test_rows(&self) -> Range<usize> {
        self.header.train..self.header.count
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = serde_json::to_string(&self.header).map_err(|e| Error::Format {
            path: path.into(),
            msg: e.to_string(),
        })?;
        writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
        for i in 0..self.len() {
            for row in [self.features.row(i), self.comm.row(i), self.sense.row(i)] {
                for v in row {
                    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        let fmt = |msg: String| Error::Format { path: path.into(), msg };
        let header: DatasetHeader = serde_json::from_str(line.trim_end()).map_err(|e| fmt(e.to_string()))?;
        if header.schema != DATASET_SCHEMA {
            return Err(fmt(format!("unknown schema {:?}", header.schema)));
        }
        if header.train > header.count {
            return Err(fmt("train split larger than the dataset".into()));
        }
        let stride = header.features + header.comm + header.sense;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        if bytes.len() != header.count * stride * 4 {
            return Err(fmt(format!("expected {} payload bytes, found {}", header.count * stride * 4, bytes.len())));
        }
        let values: Vec<f32> = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let all = Array2::from_shape_vec((header.count, stride), values).map_err(|e| fmt(e.to_string()))?;
        let f = header.features;
        let c = header.comm;
        Ok(Self {
            features: all.slice(s![.., ..f]).to_owned(),
            comm: all.slice(s![.., f..f + c]).to_owned(),
            sense: all.slice(s![.., f + c..]).to_owned(),
            header,
        })
    }
}
