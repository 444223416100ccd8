//! BER of SI-DFT-s-OFDM and OFDM with ZF and MMSE equalization over a
//! channel with four NLoS reflections.
//!
//! ```sh
//! cargo run --release --example ber_waveforms
//! ```

use thz_isac::channel::Scenario;
use thz_isac::harness::ber::{self, StopRule};
use thz_isac::harness::config::BerMethod;
use thz_isac::waveform::{FrameConfig, Waveform};

fn main() -> thz_isac::Result<()> {
    let frame = FrameConfig::cp(256, 128, 10, 10, 7.68e6);
    let scenario = Scenario::multipath(4);
    let stop = StopRule {
        min_errors: 100,
        max_bits: 2_000_000,
        batch: 32,
    };
    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "SNR", "OFDM ZF", "OFDM MMSE", "SC ZF", "SC MMSE");
    for snr in (0..=16).step_by(2).map(f64::from) {
        let mut line = format!("{snr:>6}");
        for wf in [Waveform::Ofdm, Waveform::SiDftsOfdm] {
            for method in [BerMethod::Zf, BerMethod::Mmse] {
                let row = ber::ber_point(&frame, &scenario, wf, method, snr, 0.0, stop, None, 1)?;
                line += &format!(" {:>14.3e}", row.ber);
            }
        }
        println!("{line}");
    }
    Ok(())
}
