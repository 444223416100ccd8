//! Single-target range and velocity accuracy against the Cramér-Rao bound.

use serde::{Deserialize, Serialize};

use super::config::{EstimatorName, ExperimentConfig, ExperimentKind, SenseConfig};
use super::learn::load_receiver;
use super::{point_stream, rmse_with_stderr, run_batches};
use crate::channel::{self, Scenario};
use crate::nn::receiver::NnReceiver;
use crate::numerics::{self, RngStream};
use crate::rx;
use crate::sensing::{self, MusicGrid, SensingCfrMatrix, TargetEstimate};
use crate::waveform::{self, FrameConfig, Waveform};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Range,
    Velocity,
}

/// RMSE in meters (range) or meters per second (velocity); `crlb` is the
/// square root of the variance bound in the same unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseRow {
    pub quantity: Quantity,
    pub estimator: EstimatorName,
    pub snr_db: f64,
    pub rmse: f64,
    pub rmse_stderr: f64,
    pub trials: usize,
    pub crlb: f64,
}

/// Sensing CFR of one reference-bearing frame with AWGN of variance
/// `10^{-snr_db/10}`, which is the per-element SNR of the LS CFR because
/// the reference subcarriers have unit magnitude. Also returns the
/// demapped frame and the true target parameters.
pub fn sense_trial(
    frame: &FrameConfig,
    scenario: &Scenario,
    cfg: &SenseConfig,
    snr_db: f64,
    rng: &mut RngStream,
) -> Result<(SensingCfrMatrix, rx::RxFrame, channel::TargetTruth)> {
    let tx = waveform::random_frame(frame, Waveform::SiDftsOfdm, rng)?;
    let x = waveform::modulate(frame, &tx)?;
    let ch = channel::sample_training_channel(frame, scenario, rng)?;
    let truth = *ch.targets.first().ok_or(Error::Empty("scenario targets"))?;
    let mut y = channel::apply_channel(frame, &ch, &x)?;
    channel::add_noise(&mut y, numerics::db_to_linear(-snr_db), rng)?;
    let rxf = rx::demap_to_freq(frame, &y)?;
    let mut cfr = SensingCfrMatrix::from_rx(&rxf, cfg.geometry)?;
    if let Some(k) = cfg.subcarriers {
        cfr = cfr.select_subcarriers(0..k)?;
    }
    if let Some(m) = cfg.ref_blocks {
        cfr = cfr.select_blocks(m)?;
    }
    Ok((cfr, rxf, truth))
}

fn first(est: Vec<TargetEstimate>) -> Result<TargetEstimate> {
    est.into_iter().next().ok_or_else(|| Error::Degenerate("estimator returned no target".into()))
}

fn estimate(
    q: Quantity,
    e: EstimatorName,
    cfr: &SensingCfrMatrix,
    rxf: &rx::RxFrame,
    cfg: &SenseConfig,
    nn: Option<&NnReceiver>,
) -> Result<f64> {
    let grid = MusicGrid {
        points: cfg.music_points,
        window: cfg.music_window,
    };
    match (q, e) {
        (Quantity::Range, EstimatorName::Periodogram) => Ok(first(sensing::estimate_range_periodogram(cfr, cfg.zero_pad, 1)?)?.range_m),
        (Quantity::Range, EstimatorName::Music) => Ok(first(sensing::music_range(cfr, 1, &grid)?.estimates)?.range_m),
        (Quantity::Velocity, EstimatorName::Periodogram) => {
            Ok(first(sensing::estimate_velocity_periodogram(cfr, cfg.zero_pad, 1)?)?.velocity_mps)
        }
        (Quantity::Velocity, EstimatorName::Music) => Ok(first(sensing::music_velocity(cfr, 1, &grid)?.estimates)?.velocity_mps),
        (_, EstimatorName::Nn) => {
            let nn = nn.ok_or_else(|| Error::InvalidConfig("the nn estimator needs a checkpoint".into()))?;
            let det = nn.detect(rxf)?;
            let v = match q {
                Quantity::Range => det.range_m,
                Quantity::Velocity => det.velocity_mps,
            };
            v.ok_or_else(|| Error::InvalidConfig(format!("checkpoint receiver {:?} has no {q:?} output", nn.kind)))
        }
    }
}

fn crlb(q: Quantity, cfr: &SensingCfrMatrix, frame: &FrameConfig, snr_db: f64) -> Result<f64> {
    let snr = numerics::db_to_linear(snr_db);
    let var = match q {
        Quantity::Range => sensing::crlb_range_for(cfr.geometry, snr, cfr.cols(), cfr.rows(), cfr.subcarrier_spacing)?,
        Quantity::Velocity => sensing::crlb_velocity_for(
            cfr.geometry,
            snr,
            cfr.cols(),
            cfr.rows(),
            frame.ref_spacing,
            frame.block_duration(),
            cfr.carrier,
        )?,
    };
    Ok(var.sqrt())
}

/// One row per estimator and SNR. All estimators see the same frames,
/// targets and noise at a given SNR.
pub fn sense_sweep(
    q: Quantity,
    frame: &FrameConfig,
    scenario: &Scenario,
    cfg: &SenseConfig,
    nn: Option<&NnReceiver>,
    seed: u64,
) -> Result<Vec<SenseRow>> {
    let mut rows = Vec::new();
    for &snr in &cfg.snr_db {
        let root = RngStream::new(seed, point_stream(&[q as u64, snr.to_bits()]));
        let mut errors: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.trials); cfg.estimators.len()];
        let mut bound = f64::NAN;
        run_batches(
            &root,
            64,
            cfg.trials,
            |_, rng| {
                let (cfr, rxf, truth) = sense_trial(frame, scenario, cfg, snr, rng)?;
                let t = match q {
                    Quantity::Range => truth.range_m,
                    Quantity::Velocity => truth.velocity_mps,
                };
                let errs = cfg
                    .estimators
                    .iter()
                    .map(|&e| estimate(q, e, &cfr, &rxf, cfg, nn).map(|v| v - t))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((errs, crlb(q, &cfr, frame, snr)?))
            },
            |(errs, b)| {
                for (acc, e) in errors.iter_mut().zip(errs) {
                    acc.push(e);
                }
                bound = b;
            },
            || false,
        )?;
        for (&e, errs) in cfg.estimators.iter().zip(&errors) {
            let (rmse, rmse_stderr) = rmse_with_stderr(errs);
            rows.push(SenseRow {
                quantity: q,
                estimator: e,
                snr_db: snr,
                rmse,
                rmse_stderr,
                trials: errs.len(),
                crlb: bound,
            });
        }
    }
    Ok(rows)
}

pub fn run_sense(cfg: &ExperimentConfig) -> Result<Vec<SenseRow>> {
    let q = match cfg.experiment {
        ExperimentKind::SenseRange => Quantity::Range,
        ExperimentKind::SenseVelocity => Quantity::Velocity,
        other => return Err(Error::InvalidConfig(format!("{} is not a sensing experiment", other.label()))),
    };
    let frame = cfg.frame()?;
    let s = cfg.sense()?;
    let nn = match (&s.checkpoint, s.estimators.contains(&EstimatorName::Nn)) {
        (Some(path), true) => Some(load_receiver(path, Some(&frame))?),
        _ => None,
    };
    sense_sweep(q, &frame, cfg.channel()?, s, nn.as_ref(), cfg.seed)
}
