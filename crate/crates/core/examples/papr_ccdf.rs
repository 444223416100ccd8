//! PAPR of SI-DFT-s-OFDM (CP and FGI) against OFDM.
//!
//! Prints the PAPR exceeded by 1% of the data blocks for N = 64 and 1024
//! with L = N/2 and K_p = L/4.
//!
//! ```sh
//! cargo run --release --example papr_ccdf -- 20000
//! ```

use thz_isac::harness::config::{GuardKind, PaprConfig};
use thz_isac::harness::papr;

fn main() -> thz_isac::Result<()> {
    let blocks = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let cfg = PaprConfig {
        guards: vec![GuardKind::Cp, GuardKind::Fgi],
        blocks,
        ..PaprConfig::default()
    };
    let series = papr::run_papr(&cfg, 1)?;
    println!("{blocks} blocks per curve, PAPR at CCDF 1e-2:");
    for s in &series {
        println!(
            "  N = {:>4}  {:<13} {:<3}  {:5.2} dB",
            s.subcarriers,
            s.waveform.label(),
            format!("{:?}", s.guard).to_lowercase(),
            s.threshold_at(1e-2)
        );
    }
    Ok(())
}
