//! Range RMSE of the periodogram and MUSIC from one reference block
//! (K = 32 subcarriers) against the Cramér-Rao bound.
//!
//! ```sh
//! cargo run --release --example range_accuracy
//! ```

use thz_isac::channel::Scenario;
use thz_isac::harness::config::{EstimatorName, SenseConfig};
use thz_isac::harness::sense::{self, Quantity};
use thz_isac::sensing::SensingGeometry;
use thz_isac::waveform::FrameConfig;

fn main() -> thz_isac::Result<()> {
    let frame = FrameConfig::cp(64, 32, 1, 1, 7.68e6);
    let cfg = SenseConfig {
        estimators: vec![EstimatorName::Periodogram, EstimatorName::Music],
        snr_db: vec![0.0, 10.0, 20.0, 30.0],
        trials: 200,
        geometry: SensingGeometry::Monostatic,
        subcarriers: None,
        ref_blocks: None,
        zero_pad: 16,
        music_points: 4096,
        music_window: None,
        checkpoint: None,
    };
    let rows = sense::sense_sweep(Quantity::Range, &frame, &Scenario::SingleTarget { max_speed_mps: 0.0 }, &cfg, None, 1)?;
    println!("{:>6} {:<12} {:>12} {:>12}", "SNR", "estimator", "RMSE (mm)", "CRLB (mm)");
    for r in rows {
        println!("{:>6} {:<12} {:>12.2} {:>12.2}", r.snr_db, r.estimator.label(), r.rmse * 1e3, r.crlb * 1e3);
    }
    Ok(())
}
