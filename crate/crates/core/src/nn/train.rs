//! Mini-batch training with Adam and per-epoch loss history.

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::layer::Mode;
use super::model::{AdamConfig, ArchSpec, FeatureNorm, LossParts, LossWeights, MlpModel};
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub weights: LossWeights,
    /// Learning rate multiplier applied after every epoch.
    #[serde(default = "unit")]
    pub lr_decay: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 128,
            adam: AdamConfig::default(),
            weights: LossWeights::default(),
            lr_decay: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch size must be at least 2".into()));
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::NonPositiveLearningRate(self.adam.lr));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!("lr_decay {} is outside (0, 1]", self.lr_decay)));
        }
        Ok(())
    }
}

/// Losses after `epoch` passes over the training split (epoch 0 is the
/// untrained model), both evaluated in inference mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossParts,
    pub test: LossParts,
}

/// Rows and communication-label columns a model is trained on.
#[derive(Clone, Copy, Debug)]
pub struct DataView<'a> {
    pub features: ArrayView2<'a, f32>,
    pub comm: ArrayView2<'a, f32>,
    pub sense: ArrayView2<'a, f32>,
}

impl<'a> DataView<'a> {
    pub fn new(data: &'a Dataset, rows: Range<usize>, comm_cols: Range<usize>) -> Self {
        Self {
            features: data.features.slice(s![rows.clone(), ..]),
            comm: data.comm.slice(s![rows.clone(), comm_cols]),
            sense: data.sense.slice(s![rows, ..]),
        }
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Inference-mode loss over all rows, evaluated in chunks.
pub fn evaluate_loss(model: &MlpModel<f32>, view: &DataView) -> Result<LossParts> {
    if view.is_empty() {
        return Ok(LossParts::default());
    }
    let n = view.len();
    let mut acc = LossParts::default();
    for start in (0..n).step_by(1024) {
        let end = (start + 1024).min(n);
        let part = model.loss(
            &view.features.slice(s![start..end, ..]).to_owned(),
            &view.comm.slice(s![start..end, ..]).to_owned(),
            &view.sense.slice(s![start..end, ..]).to_owned(),
            Mode::Inference,
        )?;
        let w = (end - start) as f64 / n as f64;
        acc.comm += w * part.comm;
        acc.sense += w * part.sense;
    }
    acc.total = model.weights.a1 * acc.comm + model.weights.a2 * acc.sense;
    Ok(acc)
}

fn gather(src: &ArrayView2<f32>, idx: &[usize]) -> Array2<f32> {
    src.select(Axis(0), idx)
}

/// Train `model` in place. An untrained model first fits its feature
/// normalization to the training rows. With `lr = 0` the model is left
/// untouched (including batch-norm running statistics), so every epoch
/// reports the same losses.
pub fn train_model(
    model: &mut MlpModel<f32>,
    train: &DataView,
    test: &DataView,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if model.adam.is_none() {
        model.norm = FeatureNorm::fit(&train.features.to_owned());
    }
    model.weights = cfg.weights;
    let frozen = cfg.adam.lr == 0.0;
    let mut rng = RngStream::new(seed, 0x7a1e);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    history.push(EpochRecord {
        epoch: 0,
        train: evaluate_loss(model, train)?,
        test: evaluate_loss(model, test)?,
    });
    let mut adam = cfg.adam;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            // A single row has no batch statistics.
            if batch.len() < 2 {
                continue;
            }
            let x = gather(&train.features, batch);
            let c = gather(&train.comm, batch);
            let s = gather(&train.sense, batch);
            let pass = model.forward(&x, Mode::Train)?;
            let (_, grads) = model.backward(&pass, &c, &s)?;
            if !frozen {
                model.adam_step(&grads, &adam)?;
                model.update_running_stats(&pass);
            }
        }
        adam.lr *= cfg.lr_decay;
        history.push(EpochRecord {
            epoch,
            train: evaluate_loss(model, train)?,
            test: evaluate_loss(model, test)?,
        });
    }
    Ok(history)
}

/// Number of group models for `comm_width` label columns.
pub fn group_count(comm_width: usize, group_width: usize) -> Result<usize> {
    if group_width == 0 || !comm_width.is_multiple_of(group_width) {
        return Err(Error::InvalidConfig(format!(
            "communication width {comm_width} is not a multiple of the group width {group_width}"
        )));
    }
    Ok(comm_width / group_width)
}

/// Train one model per group of `group_width` communication outputs, each
/// also carrying the sensing branch. Groups train concurrently on disjoint
/// RNG streams. The merged history sums the communication losses over
/// groups (the full-block squared error) and averages the sensing losses.
pub fn train_groups(
    spec: &ArchSpec,
    data: &Dataset,
    group_width: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Vec<MlpModel<f32>>, Vec<EpochRecord>)> {
    // Sensing-only data has no communication columns: a single model.
    let (groups, group_width) = match data.header.comm {
        0 => (1, 0),
        w => (group_count(w, group_width)?, group_width),
    };
    let mut spec = spec.clone();
    spec.comm_out = group_width;
    let root = RngStream::new(seed, 0x6e6e);
    let results: Vec<(MlpModel<f32>, Vec<EpochRecord>)> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = root.fork(g as u64);
            let mut model = MlpModel::<f32>::build(&spec, cfg.weights, &mut rng)?;
            let cols = g * group_width..(g + 1) * group_width;
            let train = DataView::new(data, data.train_rows(), cols.clone());
            let test = DataView::new(data, data.test_rows(), cols);
            let h = train_model(&mut model, &train, &test, cfg, seed.wrapping_add(g as u64))?;
            Ok((model, h))
        })
        .collect::<Result<_>>()?;
    let merged = merge_histories(results.iter().map(|(_, h)| h.as_slice()), cfg.weights);
    Ok((results.into_iter().map(|(m, _)| m).collect(), merged))
}

pub fn merge_histories<'a>(histories: impl Iterator<Item = &'a [EpochRecord]>, w: LossWeights) -> Vec<EpochRecord> {
    let hs: Vec<&[EpochRecord]> = histories.collect();
    let Some(first) = hs.first() else {
        return Vec::new();
    };
    let n = hs.len() as f64;
    (0..first.len())
        .map(|e| {
            let merge = |pick: fn(&EpochRecord) -> LossParts| {
                let comm: f64 = hs.iter().map(|h| pick(&h[e]).comm).sum();
                let sense = hs.iter().map(|h| pick(&h[e]).sense).sum::<f64>() / n;
                LossParts {
                    comm,
                    sense,
                    total: w.a1 * comm + w.a2 * sense,
                }
            };
            EpochRecord {
                epoch: first[e].epoch,
                train: merge(|r| r.train),
                test: merge(|r| r.test),
            }
        })
        .collect()
}
