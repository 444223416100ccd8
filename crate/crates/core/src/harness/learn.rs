//! Training and evaluation of the network receivers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ArchOverrides, ExperimentConfig, TrainSection};
use super::{point_stream, rate_stderr};
use crate::channel::Scenario;
use crate::nn::dataset::{self, Dataset, DatasetKind, DatasetSpec, Level1};
use crate::nn::receiver::{self, NnReceiver, ReceiverKind};
use crate::nn::train::{self, EpochRecord, TrainConfig};
use crate::nn::{Activation, AdamConfig, ArchSpec, LossWeights, MlpModel};
use crate::waveform::FrameConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Level1,
    Level2,
    Single,
}

/// Losses after each epoch (epoch 0 is the untrained network).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub stage: Stage,
    pub epoch: usize,
    pub train_loss_c: f64,
    pub train_loss_s: f64,
    pub train_loss: f64,
    pub test_loss_c: f64,
    pub test_loss_s: f64,
    pub test_loss: f64,
}

impl HistoryRow {
    fn from_record(stage: Stage, r: &EpochRecord) -> Self {
        Self {
            stage,
            epoch: r.epoch,
            train_loss_c: r.train.comm,
            train_loss_s: r.train.sense,
            train_loss: r.train.total,
            test_loss_c: r.test.comm,
            test_loss_s: r.test.sense,
            test_loss: r.test.total,
        }
    }
}

/// Metrics of a receiver on freshly generated samples at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    pub rows: usize,
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: Option<f64>,
    pub ber_stderr: Option<f64>,
    pub range_rmse_m: Option<f64>,
    pub velocity_rmse_mps: Option<f64>,
}

fn apply(mut spec: ArchSpec, o: &ArchOverrides) -> ArchSpec {
    if let Some(v) = &o.shared {
        spec.shared = v.clone();
    }
    if let Some(v) = &o.comm_hidden {
        spec.comm_hidden = v.clone();
    }
    if let Some(v) = &o.sense_hidden {
        spec.sense_hidden = v.clone();
    }
    if let Some(b) = o.batchnorm {
        spec.batchnorm = b;
    }
    spec
}

/// Default layer sizes for each dataset layout: a `[500, 250]` ReLU trunk
/// with a `[120]` communication branch and a `[120, 60]` sensing branch, or
/// a `[500, 250, 120, 60]` trunk for the sensing-only networks. Velocity
/// outputs use tanh (signed), range outputs sigmoid.
pub fn default_arch(kind: DatasetKind, frame: &FrameConfig, group_width: usize) -> ArchSpec {
    let (input, comm, _) = dataset::widths(kind, frame);
    let two_branch = |comm_out, sense_activation| ArchSpec {
        input,
        shared: vec![500, 250],
        comm_hidden: vec![120],
        comm_out,
        comm_activation: Activation::Tanh,
        sense_hidden: vec![120, 60],
        sense_out: 1,
        sense_activation,
        batchnorm: true,
    };
    let sensing = |sense_activation| ArchSpec {
        input,
        shared: vec![500, 250, 120, 60],
        comm_hidden: vec![],
        comm_out: 0,
        comm_activation: Activation::Tanh,
        sense_hidden: vec![],
        sense_out: 1,
        sense_activation,
        batchnorm: true,
    };
    match kind {
        DatasetKind::Level2Simplified | DatasetKind::Level2 => two_branch(group_width, Activation::Sigmoid),
        DatasetKind::Level1 => two_branch(comm, Activation::Tanh),
        DatasetKind::RangeOnly => sensing(Activation::Sigmoid),
        DatasetKind::VelocityOnly => sensing(Activation::Tanh),
    }
}

pub struct TrainOutcome {
    pub receiver: NnReceiver,
    pub history: Vec<HistoryRow>,
    /// Training set of the final stage.
    pub dataset: Dataset,
}

fn data_spec(kind: DatasetKind, frame: &FrameConfig, scenario: &Scenario, t: &TrainSection) -> DatasetSpec {
    DatasetSpec {
        kind,
        frame: frame.clone(),
        scenario: scenario.clone(),
        size: t.data.size,
        snr_db: t.data.snr_db.clone(),
        phase_noise: t.data.phase_noise,
        test_fraction: t.data.test_fraction,
    }
}

/// Generate the training data and train every stage of the requested
/// receiver. The two-level receiver trains level 1 first, then builds the
/// level-2 set from fresh frames run through the trained level-1 network.
pub fn train_receiver(frame: &FrameConfig, scenario: &Scenario, t: &TrainSection, seed: u64) -> Result<TrainOutcome> {
    let weights = LossWeights { a1: t.a1, a2: t.a2 };
    let tcfg = |epochs| TrainConfig {
        epochs,
        batch_size: t.batch_size,
        adam: AdamConfig {
            lr: t.lr,
            ..AdamConfig::default()
        },
        weights,
        lr_decay: t.lr_decay,
    };
    let mut history = Vec::new();
    let kind = t.receiver.dataset_kind();
    let (level1, h_scale, level1_model) = if t.receiver == ReceiverKind::TwoLevel {
        let spec = data_spec(DatasetKind::Level1, frame, scenario, t);
        let data = dataset::generate_dataset(&spec, seed)?;
        let arch = apply(default_arch(DatasetKind::Level1, frame, data.header.comm), &t.level1_arch);
        let (mut models, h) = train::train_groups(&arch, &data, data.header.comm, &tcfg(t.level1_epochs.unwrap_or(t.epochs)), seed)?;
        history.extend(h.iter().map(|r| HistoryRow::from_record(Stage::Level1, r)));
        let model = models.pop().ok_or(Error::Empty("level-1 model"))?;
        (true, data.header.h_scale, Some(model))
    } else {
        (false, 1.0, None)
    };
    let spec = data_spec(kind, frame, scenario, t);
    let level2_seed = if level1 { point_stream(&[seed, 2]) } else { seed };
    let data = dataset::generate_dataset_with(
        &spec,
        level2_seed,
        level1_model.as_ref().map(|model| Level1 { model, h_scale }),
    )?;
    let width = if data.header.comm == 0 { 0 } else { t.group_width };
    let arch = apply(default_arch(kind, frame, width), &t.arch);
    let (groups, h) = train::train_groups(&arch, &data, width, &tcfg(t.epochs), seed)?;
    let stage = match t.receiver {
        ReceiverKind::Range | ReceiverKind::Velocity => Stage::Single,
        _ => Stage::Level2,
    };
    history.extend(h.iter().map(|r| HistoryRow::from_record(stage, r)));
    let receiver = NnReceiver {
        kind: t.receiver,
        frame: frame.clone(),
        r_max: data.header.r_max,
        v_max: data.header.v_max,
        h_scale,
        level1: level1_model,
        groups,
    };
    receiver.validate()?;
    Ok(TrainOutcome {
        receiver,
        history,
        dataset: data,
    })
}

/// Train, write the checkpoint (and optionally the dataset) and return the
/// loss history.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let t = cfg.train()?;
    let out = train_receiver(&cfg.frame()?, cfg.channel()?, t, cfg.seed)?;
    out.receiver.save(&t.checkpoint)?;
    if let Some(path) = &t.dataset_out {
        out.dataset.write(path)?;
    }
    Ok(out)
}

/// Load a checkpoint and check that it was trained for `frame`.
pub fn load_receiver(path: &Path, frame: Option<&FrameConfig>) -> Result<NnReceiver> {
    let rx = NnReceiver::load(path)?;
    if let Some(f) = frame {
        if &rx.frame != f {
            return Err(Error::InvalidConfig(format!(
                "checkpoint {} was trained for a different frame",
                path.display()
            )));
        }
    }
    Ok(rx)
}

/// Evaluate a receiver on `size` new samples per SNR value.
pub fn evaluate_receiver(
    rx: &NnReceiver,
    scenario: &Scenario,
    size: usize,
    snr_db: &[f64],
    phase_noise: dataset::PhaseNoise,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    for &snr in snr_db {
        let spec = DatasetSpec {
            kind: rx.kind.dataset_kind(),
            frame: rx.frame.clone(),
            scenario: scenario.clone(),
            size,
            snr_db: vec![snr],
            phase_noise,
            test_fraction: 0.0,
        };
        let level1 = rx.level1.as_ref().map(|model| Level1 {
            model,
            h_scale: rx.h_scale,
        });
        let data = dataset::generate_dataset_with(&spec, point_stream(&[seed, snr.to_bits()]), level1)?;
        let m = receiver::evaluate_rows(&rx.groups, &data, 0..data.len())?;
        rows.push(EvalRow {
            receiver: rx.kind,
            snr_db: snr,
            rows: m.rows,
            bits: m.bits,
            bit_errors: m.bit_errors,
            ber: m.ber,
            ber_stderr: m.ber.map(|_| rate_stderr(m.bit_errors as u64, m.bits as u64)),
            range_rmse_m: m.range_rmse_m,
            velocity_rmse_mps: m.velocity_rmse_mps,
        });
    }
    Ok(rows)
}

pub fn run_eval(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    let e = cfg.eval()?;
    let frame = match &cfg.frame {
        Some(f) => Some(f.to_frame()?),
        None => None,
    };
    let rx = load_receiver(&e.checkpoint, frame.as_ref())?;
    evaluate_receiver(&rx, cfg.channel()?, e.size, &e.snr_db, e.phase_noise, cfg.seed)
}

/// Group models of a receiver cast to `f64`, for inspection.
pub fn groups_f64(rx: &NnReceiver) -> Vec<MlpModel<f64>> {
    rx.groups.iter().map(MlpModel::cast).collect()
}
