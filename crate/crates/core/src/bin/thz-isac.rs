use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thz_isac::harness::{self, ExperimentConfig, ExperimentKind};
use thz_isac::{Error, Result};

#[derive(Parser)]
#[command(name = "thz-isac", version, about = "Waveform, channel, receiver and sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PAPR CCDF of the data blocks.
    Papr(Common),
    /// Bit error rate versus SNR.
    Ber(Common),
    /// Achievable rate of CP and FGI framing.
    Rate(Common),
    /// Range or velocity RMSE against the Cramér-Rao bound.
    Sense(Common),
    /// Train a network receiver and write its checkpoint.
    Train(Common),
    /// Evaluate a trained checkpoint.
    Eval(Common),
}

#[derive(clap::Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn error_line(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            error_line("usage", msg.lines().next().unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error_line(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn accepts(command: &Command, kind: ExperimentKind) -> bool {
    matches!(
        (command, kind),
        (Command::Papr(_), ExperimentKind::Papr)
            | (Command::Ber(_), ExperimentKind::Ber)
            | (Command::Rate(_), ExperimentKind::Rate)
            | (Command::Sense(_), ExperimentKind::SenseRange | ExperimentKind::SenseVelocity)
            | (Command::Train(_), ExperimentKind::Train)
            | (Command::Eval(_), ExperimentKind::Eval)
    )
}

fn run(command: Command) -> Result<()> {
    let args = match &command {
        Command::Papr(a) | Command::Ber(a) | Command::Rate(a) | Command::Sense(a) | Command::Train(a) | Command::Eval(a) => a,
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if !accepts(&command, cfg.experiment) {
        return Err(Error::InvalidConfig(format!(
            "{} describes a {} experiment",
            args.config.display(),
            cfg.experiment.label()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &cfg.papr {
        if p.oversample > 1 {
            eprintln!("note: PAPR measured on {}x oversampled blocks", p.oversample);
        }
    }
    let threads = match args.threads {
        Some(0) => return Err(Error::InvalidConfig("--threads must be at least 1".into())),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let report = pool.install(|| harness::run(&cfg))?;
    match &args.out {
        Some(path) => report.write_csv(path),
        None => report.write_to(std::io::stdout().lock()),
    }
}
