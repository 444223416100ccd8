//! Receivers assembled from trained networks, and evaluation metrics.

use std::ops::Range;

use ndarray::{concatenate, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dataset::{self, Dataset, DatasetKind};
use super::model::MlpModel;
use crate::numerics;
use crate::rx::RxFrame;
use crate::waveform::{FrameConfig, QAM_ORDER};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    /// Group models fed `[Y_D, P̃_R]` (time-invariant channels).
    Simplified,
    /// Level-1 CFR/velocity network followed by group models fed
    /// `[Y_D, Ĥ_D]`.
    TwoLevel,
    /// Range-only network on reference blocks.
    Range,
    /// Velocity-only network on reference subcarriers.
    Velocity,
}

impl ReceiverKind {
    /// Dataset layout the group models are trained on.
    pub fn dataset_kind(self) -> DatasetKind {
        match self {
            ReceiverKind::Simplified => DatasetKind::Level2Simplified,
            ReceiverKind::TwoLevel => DatasetKind::Level2,
            ReceiverKind::Range => DatasetKind::RangeOnly,
            ReceiverKind::Velocity => DatasetKind::VelocityOnly,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NnReceiver {
    pub kind: ReceiverKind,
    pub frame: FrameConfig,
    pub r_max: f64,
    pub v_max: f64,
    /// Level-1 CFR output scale.
    pub h_scale: f64,
    pub level1: Option<MlpModel<f32>>,
    /// Group models; the communication outputs concatenate in order.
    pub groups: Vec<MlpModel<f32>>,
}

/// Per-frame outputs of [`NnReceiver::detect`].
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    /// Soft data-symbol estimates, one row per data block.
    pub symbols: Vec<Vec<Complex64>>,
    pub range_m: Option<f64>,
    pub velocity_mps: Option<f64>,
}

/// Run every group model on `x`; communication outputs are concatenated
/// and sensing outputs averaged.
pub fn predict_groups(models: &[MlpModel<f32>], x: &Array2<f32>) -> Result<(Array2<f32>, Array2<f32>)> {
    let Some(first) = models.first() else {
        return Err(Error::Empty("group models"));
    };
    let mut comm = Vec::with_capacity(models.len());
    let mut sense = Array2::<f32>::zeros((x.nrows(), first.sense_width()));
    for m in models {
        let (c, s) = m.predict(x)?;
        if s.ncols() != sense.ncols() {
            return Err(Error::Shape("group models disagree on the sensing width".into()));
        }
        comm.push(c);
        sense += &s;
    }
    sense /= models.len() as f32;
    let views: Vec<_> = comm.iter().map(|c| c.view()).collect();
    let comm = concatenate(Axis(1), &views).map_err(|e| Error::Shape(e.to_string()))?;
    Ok((comm, sense))
}

fn rows_to_array(rows: Vec<Vec<f32>>) -> Result<Array2<f32>> {
    let cols = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.concat()).map_err(|e| Error::Shape(e.to_string()))
}

fn mean_column(s: &Array2<f32>) -> Option<f64> {
    (s.ncols() > 0 && s.nrows() > 0).then(|| s.column(0).iter().map(|&v| v as f64).sum::<f64>() / s.nrows() as f64)
}

fn complex_rows(comm: &Array2<f32>, scale: f64) -> Vec<Vec<Complex64>> {
    comm.rows()
        .into_iter()
        .map(|r| {
            r.as_slice()
                .unwrap_or(&r.to_vec())
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0] as f64, p[1] as f64) * scale)
                .collect()
        })
        .collect()
}

/// Level-1 pass over all subcarriers: the CFR estimate at every data block
/// (`[data block][subcarrier]`) and the mean normalized velocity output.
pub fn level1_estimate(rx: &RxFrame, model: &MlpModel<f32>, h_scale: f64) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let l = rx.cfg.block_size;
    let x = rows_to_array((0..l).map(|n| dataset::subcarrier_features(rx, n)).collect())?;
    let (comm, sense) = model.predict(&x)?;
    let per_subcarrier = complex_rows(&comm, h_scale);
    let blocks = rx.cfg.data_blocks();
    if per_subcarrier.first().map_or(0, Vec::len) != blocks {
        return Err(Error::LengthMismatch {
            expected: 2 * blocks,
            got: comm.ncols(),
        });
    }
    let cfr = (0..blocks).map(|d| per_subcarrier.iter().map(|row| row[d]).collect()).collect();
    Ok((cfr, mean_column(&sense).unwrap_or(0.0)))
}

impl NnReceiver {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.groups.is_empty() {
            return Err(Error::Empty("group models"));
        }
        let (features, comm, _) = dataset::widths(self.kind.dataset_kind(), &self.frame);
        let total: usize = self.groups.iter().map(MlpModel::comm_width).sum();
        if total != comm {
            return Err(Error::LengthMismatch { expected: comm, got: total });
        }
        for g in &self.groups {
            if g.input_width() != features {
                return Err(Error::LengthMismatch {
                    expected: features,
                    got: g.input_width(),
                });
            }
        }
        if (self.kind == ReceiverKind::TwoLevel) != self.level1.is_some() {
            return Err(Error::InvalidConfig("a level-1 model is required exactly for the two-level receiver".into()));
        }
        Ok(())
    }

    /// Detect the data symbols of a received frame and estimate the target
    /// parameters; sensing outputs are averaged over all rows of the frame.
    pub fn detect(&self, rx: &RxFrame) -> Result<Detection> {
        let cfg = &self.frame;
        let data = cfg.data_positions();
        let mut velocity = None;
        let rows: Vec<Vec<f32>> = match self.kind {
            ReceiverKind::Simplified => data.iter().map(|&m| dataset::level2_features(rx, m)).collect(),
            ReceiverKind::TwoLevel => {
                let l1 = self.level1.as_ref().ok_or(Error::Empty("level-1 model"))?;
                let (cfr, v) = level1_estimate(rx, l1, self.h_scale)?;
                velocity = Some(v * self.v_max);
                data.iter()
                    .zip(&cfr)
                    .map(|(&m, h)| {
                        let mut row = Vec::with_capacity(4 * cfg.block_size);
                        for c in rx.blocks[m].iter().chain(h) {
                            row.push(c.re as f32);
                            row.push(c.im as f32);
                        }
                        row
                    })
                    .collect()
            }
            ReceiverKind::Range => rx
                .ref_positions
                .iter()
                .map(|&m| rx.blocks[m].iter().flat_map(|c| [c.re as f32, c.im as f32]).collect())
                .collect(),
            ReceiverKind::Velocity => (0..cfg.block_size).map(|n| dataset::subcarrier_features(rx, n)).collect(),
        };
        let (comm, sense) = predict_groups(&self.groups, &rows_to_array(rows)?)?;
        let norm = mean_column(&sense);
        let (range_m, velocity_mps) = match self.kind {
            ReceiverKind::Velocity => (None, norm.map(|v| v * self.v_max)),
            _ => (norm.map(|r| r * self.r_max), velocity),
        };
        Ok(Detection {
            symbols: if comm.ncols() > 0 { complex_rows(&comm, 1.0) } else { Vec::new() },
            range_m,
            velocity_mps,
        })
    }

    /// Hard-decision payload bits of a received frame.
    pub fn receive_bits(&self, rx: &RxFrame) -> Result<Vec<u8>> {
        let det = self.detect(rx)?;
        numerics::qam_demap(&det.symbols.concat(), QAM_ORDER)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rows: usize,
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: Option<f64>,
    /// Mean squared error of the level-1 CFR outputs (normalized units).
    pub comm_mse: Option<f64>,
    pub range_rmse_m: Option<f64>,
    pub velocity_rmse_mps: Option<f64>,
}

/// Score network outputs against dataset labels. Communication columns of
/// symbol layouts are one bit each (the sign of a 4-QAM component).
pub fn evaluate_predictions(
    kind: DatasetKind,
    comm_pred: &Array2<f32>,
    comm_true: &Array2<f32>,
    sense_pred: &Array2<f32>,
    sense_true: &Array2<f32>,
    r_max: f64,
    v_max: f64,
) -> Result<Metrics> {
    if comm_pred.dim() != comm_true.dim() || sense_pred.dim() != sense_true.dim() {
        return Err(Error::Shape("predictions and labels differ in shape".into()));
    }
    let mut m = Metrics {
        rows: comm_true.nrows().max(sense_true.nrows()),
        ..Metrics::default()
    };
    match kind {
        DatasetKind::Level2Simplified | DatasetKind::Level2 => {
            m.bits = comm_true.len();
            m.bit_errors = comm_pred
                .iter()
                .zip(comm_true)
                .filter(|(p, t)| (**p >= 0.0) != (**t >= 0.0))
                .count();
            m.ber = (m.bits > 0).then(|| m.bit_errors as f64 / m.bits as f64);
        }
        DatasetKind::Level1 if !comm_true.is_empty() => {
            let se: f64 = comm_pred.iter().zip(comm_true).map(|(p, t)| ((p - t) as f64).powi(2)).sum();
            m.comm_mse = Some(se / comm_true.len() as f64);
        }
        _ => {}
    }
    if sense_true.ncols() > 0 && sense_true.nrows() > 0 {
        let mse: f64 = sense_pred
            .column(0)
            .iter()
            .zip(sense_true.column(0))
            .map(|(p, t)| ((p - t) as f64).powi(2))
            .sum::<f64>()
            / sense_true.nrows() as f64;
        match kind {
            DatasetKind::Level1 | DatasetKind::VelocityOnly => m.velocity_rmse_mps = Some(mse.sqrt() * v_max),
            _ => m.range_rmse_m = Some(mse.sqrt() * r_max),
        }
    }
    Ok(m)
}

/// Evaluate group models on the test split of a dataset.
pub fn evaluate_dataset(models: &[MlpModel<f32>], data: &Dataset) -> Result<Metrics> {
    evaluate_rows(models, data, data.test_rows())
}

pub fn evaluate_rows(models: &[MlpModel<f32>], data: &Dataset, rows: Range<usize>) -> Result<Metrics> {
    if rows.is_empty() || rows.end > data.len() {
        return Err(Error::Empty("evaluation rows"));
    }
    let x = data.features.slice(ndarray::s![rows.clone(), ..]).to_owned();
    let (comm, sense) = predict_groups(models, &x)?;
    evaluate_predictions(
        data.header.kind,
        &comm,
        &data.comm.slice(ndarray::s![rows.clone(), ..]).to_owned(),
        &sense,
        &data.sense.slice(ndarray::s![rows, ..]).to_owned(),
        data.header.r_max,
        data.header.v_max,
    )
}
