//! Velocity RMSE from 32 reference blocks on a single subcarrier,
//! targets uniform in ±100 km/h.
//!
//! ```sh
//! cargo run --release --example velocity_accuracy
//! ```

use thz_isac::channel::Scenario;
use thz_isac::harness::config::{EstimatorName, SenseConfig};
use thz_isac::harness::sense::{self, Quantity};
use thz_isac::sensing::SensingGeometry;
use thz_isac::waveform::FrameConfig;

fn main() -> thz_isac::Result<()> {
    let frame = FrameConfig::cp(64, 32, 320, 10, 1.92e6);
    let cfg = SenseConfig {
        estimators: vec![EstimatorName::Periodogram, EstimatorName::Music],
        snr_db: vec![0.0, 10.0, 20.0],
        trials: 100,
        geometry: SensingGeometry::Monostatic,
        subcarriers: Some(1),
        ref_blocks: None,
        zero_pad: 16,
        music_points: 4096,
        music_window: None,
        checkpoint: None,
    };
    let scenario = Scenario::SingleTarget { max_speed_mps: 100.0 / 3.6 };
    let rows = sense::sense_sweep(Quantity::Velocity, &frame, &scenario, &cfg, None, 1)?;
    println!("{:>6} {:<12} {:>12} {:>12}", "SNR", "estimator", "RMSE (cm/s)", "CRLB (cm/s)");
    for r in rows {
        println!("{:>6} {:<12} {:>12.2} {:>12.2}", r.snr_db, r.estimator.label(), r.rmse * 1e2, r.crlb * 1e2);
    }
    Ok(())
}
