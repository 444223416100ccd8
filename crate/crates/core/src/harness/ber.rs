//! Link-level BER Monte Carlo.

use serde::{Deserialize, Serialize};

use super::config::{BerMethod, ExperimentConfig, GuardKind};
use super::learn::load_receiver;
use super::{point_stream, rate_stderr, run_batches};
use crate::channel::{self, Scenario};
use crate::nn::receiver::NnReceiver;
use crate::numerics::{self, RngStream};
use crate::rx::{self, Equalizer};
use crate::waveform::{self, FrameConfig, Guard, Waveform};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub waveform: Waveform,
    pub guard: GuardKind,
    pub method: BerMethod,
    pub snr_db: f64,
    pub pn_variance: f64,
    pub ber: f64,
    pub ber_stderr: f64,
    pub trials: usize,
    pub bits: u64,
    pub bit_errors: u64,
}

/// Stopping rule and batch size of one BER point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
    pub batch: usize,
}

/// One frame through the channel, decoded by `method`; returns
/// `(bits, bit errors)`. Reference blocks carry no payload and are not
/// counted.
#[allow(clippy::too_many_arguments)]
pub fn ber_trial(
    frame: &FrameConfig,
    scenario: &Scenario,
    wf: Waveform,
    method: BerMethod,
    snr_db: f64,
    pn_variance: f64,
    nn: Option<&NnReceiver>,
    rng: &mut RngStream,
) -> Result<(u64, u64)> {
    let tx = waveform::random_frame(frame, wf, rng)?;
    let x = waveform::modulate(frame, &tx)?;
    let ch = channel::sample_training_channel(frame, scenario, rng)?
        .with_snr_db(snr_db)
        .with_phase_noise(pn_variance);
    let (y, noise_var) = channel::transmit(frame, &ch, &x, rng)?;
    let bits = match method {
        BerMethod::Zf => rx::receive_bits(frame, wf, &y, Equalizer::Zf)?,
        BerMethod::Mmse => {
            // Unit-power subcarriers and unit mean channel power make the
            // per-subcarrier SNR the inverse of the noise variance.
            let snr_db = if noise_var > 0.0 {
                numerics::linear_to_db(1.0 / noise_var)
            } else {
                f64::INFINITY
            };
            rx::receive_bits(frame, wf, &y, Equalizer::Mmse { snr_db })?
        }
        BerMethod::Nn => {
            let nn = nn.ok_or_else(|| Error::InvalidConfig("the nn method needs a checkpoint".into()))?;
            nn.receive_bits(&rx::demap_to_freq(frame, &y)?)?
        }
    };
    Ok((tx.payload_bits.len() as u64, rx::bit_errors(&tx.payload_bits, &bits) as u64))
}

/// Simulate frames until the stopping rule fires. The trial streams depend
/// on the waveform, SNR and phase noise but not on the method, so every
/// method sees the same frames, channels and noise.
#[allow(clippy::too_many_arguments)]
pub fn ber_point(
    frame: &FrameConfig,
    scenario: &Scenario,
    wf: Waveform,
    method: BerMethod,
    snr_db: f64,
    pn_variance: f64,
    stop: StopRule,
    nn: Option<&NnReceiver>,
    seed: u64,
) -> Result<BerRow> {
    let per_frame = frame.payload_bits() as u64;
    if per_frame == 0 {
        return Err(Error::InvalidConfig("the frame carries no payload".into()));
    }
    let root = RngStream::new(seed, point_stream(&[wf as u64, snr_db.to_bits(), pn_variance.to_bits()]));
    let max_trials = stop.max_bits.div_ceil(per_frame) as usize;
    let totals = std::cell::Cell::new((0u64, 0u64));
    let trials = run_batches(
        &root,
        stop.batch,
        max_trials,
        |_, rng| ber_trial(frame, scenario, wf, method, snr_db, pn_variance, nn, rng),
        |(b, e)| {
            let (tb, te) = totals.get();
            totals.set((tb + b, te + e));
        },
        || {
            let (b, e) = totals.get();
            e >= stop.min_errors || b >= stop.max_bits
        },
    )?;
    let (bits, bit_errors) = totals.get();
    Ok(BerRow {
        waveform: wf,
        guard: match frame.guard {
            Guard::Cp { .. } => GuardKind::Cp,
            Guard::Fgi => GuardKind::Fgi,
        },
        method,
        snr_db,
        pn_variance,
        ber: bit_errors as f64 / bits as f64,
        ber_stderr: rate_stderr(bit_errors, bits),
        trials,
        bits,
        bit_errors,
    })
}

/// Every waveform × method × phase noise × SNR point of `[ber]`. The network
/// receivers are defined for SI-DFT-s-OFDM only, so `nn` rows are produced
/// for that waveform alone.
pub fn run_ber(cfg: &ExperimentConfig) -> Result<Vec<BerRow>> {
    let frame = cfg.frame()?;
    let scenario = cfg.channel()?;
    let b = cfg.ber()?;
    let nn = match (&b.checkpoint, b.methods.contains(&BerMethod::Nn)) {
        (Some(path), true) => Some(load_receiver(path, Some(&frame))?),
        _ => None,
    };
    let stop = StopRule {
        min_errors: b.min_errors,
        max_bits: b.max_bits,
        batch: b.batch,
    };
    let mut rows = Vec::new();
    for &wf in &b.waveforms {
        for &method in &b.methods {
            if method == BerMethod::Nn && wf != Waveform::SiDftsOfdm {
                continue;
            }
            for &pn in &b.pn_variance {
                for &snr in &b.snr_db {
                    rows.push(ber_point(&frame, scenario, wf, method, snr, pn, stop, nn.as_ref(), cfg.seed)?);
                }
            }
        }
    }
    Ok(rows)
}
