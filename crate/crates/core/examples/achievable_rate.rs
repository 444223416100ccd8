//! Achievable rate with a fixed CP versus a delay-adapted FGI.
//!
//! ```sh
//! cargo run --example achievable_rate
//! ```

use thz_isac::harness::config::RateConfig;
use thz_isac::harness::rate::{self, Scheme};

fn main() -> thz_isac::Result<()> {
    let cfg = RateConfig::default();
    let rows = rate::run_rate(&cfg, 1)?;
    let cp = rate::mean_rate(&rows, Scheme::Cp);
    let fgi = rate::mean_rate(&rows, Scheme::Fgi);
    println!("B = {} GHz, SNR = {} dB, {} delay-spread draws", cfg.bandwidth_hz / 1e9, cfg.snr_db, cfg.draws);
    println!("CP:  {:.1} Gbps", cp / 1e9);
    println!("FGI: {:.1} Gbps (mean), gain {:.1} Gbps", fgi / 1e9, (fgi - cp) / 1e9);
    for frac in [0.05, 0.1, 0.2, 0.25] {
        let d = frac * cfg.symbol_duration;
        println!("  delay spread {:>5.1} ns -> FGI {:.1} Gbps", d * 1e9, rate::fgi_rate(&cfg, d)? / 1e9);
    }
    Ok(())
}
