//! BER floor caused by Wiener phase noise at the receiver.
//!
//! ```sh
//! cargo run --release --example phase_noise
//! ```

use thz_isac::channel::Scenario;
use thz_isac::harness::ber::{self, StopRule};
use thz_isac::harness::config::BerMethod;
use thz_isac::waveform::{FrameConfig, Waveform};

fn main() -> thz_isac::Result<()> {
    let frame = FrameConfig::fgi(64, 32, 8, 4, 4, 7.68e6);
    let scenario = Scenario::multipath(4);
    let stop = StopRule {
        min_errors: 100,
        max_bits: 1_000_000,
        batch: 32,
    };
    println!("SNR 20 dB, SI-DFT-s-OFDM with FGI");
    println!("{:>10} {:>12} {:>12}", "variance", "ZF", "MMSE");
    for pn in [0.0, 1e-4, 1e-3, 1e-2] {
        let zf = ber::ber_point(&frame, &scenario, Waveform::SiDftsOfdm, BerMethod::Zf, 20.0, pn, stop, None, 3)?;
        let mmse = ber::ber_point(&frame, &scenario, Waveform::SiDftsOfdm, BerMethod::Mmse, 20.0, pn, stop, None, 3)?;
        println!("{pn:>10.0e} {:>12.3e} {:>12.3e}", zf.ber, mmse.ber);
    }
    Ok(())
}
