//! Train a small multi-task receiver (symbols and LoS range) and compare
//! its BER with ZF on fresh frames.
//!
//! ```sh
//! cargo run --release --example nn_receiver -- 6000 20
//! ```
//!
//! The two arguments are the training-set size (rows, one per data block)
//! and the number of epochs.

use thz_isac::channel::Scenario;
use thz_isac::harness::ber::{self, StopRule};
use thz_isac::harness::config::{ArchOverrides, BerMethod, DataSection, TrainSection};
use thz_isac::harness::learn;
use thz_isac::nn::dataset::PhaseNoise;
use thz_isac::nn::receiver::ReceiverKind;
use thz_isac::waveform::{FrameConfig, Waveform};

fn main() -> thz_isac::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let size = args.next().flatten().unwrap_or(6000);
    let epochs = args.next().flatten().unwrap_or(20);

    let frame = FrameConfig::cp(64, 32, 4, 4, 7.68e6);
    let scenario = Scenario::MultipathComm {
        nlos: 4,
        max_speed_mps: 0.0,
        random_los_delay: true,
        reflection_mean_db: -13.0,
        reflection_std_db: 2.0,
    };
    let dir = std::env::temp_dir().join("thz-isac-example");
    std::fs::create_dir_all(&dir).map_err(|e| thz_isac::Error::InvalidConfig(e.to_string()))?;
    let section = TrainSection {
        receiver: ReceiverKind::Simplified,
        data: DataSection {
            size,
            snr_db: vec![10.0, 15.0, 20.0, 25.0],
            phase_noise: PhaseNoise::None,
            test_fraction: 0.2,
        },
        checkpoint: dir.join("simplified.ckpt"),
        epochs,
        level1_epochs: None,
        batch_size: 64,
        lr: 1e-3,
        lr_decay: 1.0,
        a1: 1.0,
        a2: 1.0,
        group_width: 16,
        arch: ArchOverrides::default(),
        level1_arch: ArchOverrides::default(),
        dataset_out: None,
    };
    let out = learn::train_receiver(&frame, &scenario, &section, 1)?;
    for h in out.history.iter().step_by((epochs / 5).max(1)) {
        println!("epoch {:>3}: test Loss_c {:.4}  Loss_s {:.2e}", h.epoch, h.test_loss_c, h.test_loss_s);
    }
    out.receiver.save(&section.checkpoint)?;
    println!("checkpoint written to {}", section.checkpoint.display());

    let stop = StopRule {
        min_errors: 100,
        max_bits: 500_000,
        batch: 32,
    };
    for snr in [10.0, 20.0] {
        let zf = ber::ber_point(&frame, &scenario, Waveform::SiDftsOfdm, BerMethod::Zf, snr, 0.0, stop, None, 2)?;
        let nn = ber::ber_point(&frame, &scenario, Waveform::SiDftsOfdm, BerMethod::Nn, snr, 0.0, stop, Some(&out.receiver), 2)?;
        println!("SNR {snr} dB: ZF {:.3e}, NN {:.3e}", zf.ber, nn.ber);
    }
    let eval = learn::evaluate_receiver(&out.receiver, &scenario, 600, &[20.0], PhaseNoise::None, 3)?;
    if let Some(r) = eval[0].range_rmse_m {
        println!("LoS path length RMSE at 20 dB: {:.3} m", r);
    }
    Ok(())
}
