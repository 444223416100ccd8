//! One SI-DFT-s-OFDM frame through a two-path channel and back.
//!
//! Builds a CP frame with reference blocks every 4 blocks, passes it through
//! a channel with one echo inside the cyclic prefix, and recovers the bits
//! with LS channel estimation and MMSE equalization.
//!
//! ```sh
//! cargo run --example frame_loopback
//! ```

use thz_isac::channel::{self, ChannelRealization, PathSpec};
use thz_isac::numerics::RngStream;
use thz_isac::rx::{self, Equalizer};
use thz_isac::waveform::{self, FrameConfig, Waveform};
use thz_isac::Complex64;

fn main() -> thz_isac::Result<()> {
    let cfg = FrameConfig::cp(64, 32, 8, 4, 7.68e6);
    let mut rng = RngStream::new(7, 0);
    let tx = waveform::random_frame(&cfg, Waveform::SiDftsOfdm, &mut rng)?;
    let x = waveform::modulate(&cfg, &tx)?;
    println!(
        "{} blocks of {} samples, reference blocks at {:?}, {} payload bits",
        cfg.blocks,
        cfg.samples_per_block(),
        cfg.ref_positions(),
        tx.payload_bits.len()
    );

    // An echo 10 dB down, delayed by 5 samples (inside the 16-sample CP).
    let echo = PathSpec::new(Complex64::from_polar(0.1f64.sqrt(), 1.0), 5.0 * cfg.sample_period(), 0.0);
    let ch = ChannelRealization::new(vec![PathSpec::unit(), echo]);

    for snr_db in [f64::INFINITY, 20.0, 10.0, 5.0] {
        let (y, noise_var) = channel::transmit(&cfg, &ch.clone().with_snr_db(snr_db), &x, &mut rng)?;
        let mmse = if noise_var > 0.0 { 10.0 * (1.0 / noise_var).log10() } else { f64::INFINITY };
        let bits = rx::receive_bits(&cfg, Waveform::SiDftsOfdm, &y, Equalizer::Mmse { snr_db: mmse })?;
        println!(
            "SNR {:>5} dB: {:>3} bit errors",
            snr_db,
            rx::bit_errors(&tx.payload_bits, &bits)
        );
    }
    Ok(())
}
