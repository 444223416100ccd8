//! Run an experiment described in TOML and print the CSV rows, the same
//! path the command-line tool takes.
//!
//! ```sh
//! cargo run --release --example run_config -- configs/rate.toml
//! ```
//!
//! Without an argument a small built-in PAPR experiment is run.

use thz_isac::harness::{self, ExperimentConfig};

const BUILTIN: &str = r#"
experiment = "papr"
seed = 5

[papr]
subcarriers = [64]
blocks = 2000
step_db = 1.0
max_db = 12.0
"#;

fn main() -> thz_isac::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::parse(BUILTIN)?,
    };
    let report = harness::run(&cfg)?;
    eprintln!("{} experiment, {} rows", cfg.experiment.label(), report.len());
    report.write_to(std::io::stdout().lock())
}
