//! Experiment driver: configuration, Monte Carlo orchestration and CSV
//! output for PAPR, BER, achievable rate, sensing accuracy and the network
//! receivers.
//!
//! Trial `i` of a sweep point always draws from `fork(i)` of that point's
//! stream and stopping rules are checked only between fixed-size batches, so
//! `(config, seed)` determines every output regardless of the thread count.

pub mod ber;
pub mod config;
pub mod learn;
pub mod papr;
pub mod rate;
pub mod sense;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::numerics::RngStream;
use crate::{Error, Result};

pub use ber::{run_ber, BerRow};
pub use config::{ExperimentConfig, ExperimentKind};
pub use learn::{run_eval, run_train, EvalRow, HistoryRow};
pub use papr::{run_papr, PaprRow, PaprSeries};
pub use rate::{run_rate, RateRow};
pub use sense::{run_sense, SenseRow};

/// Run trials `0, 1, 2, …` in parallel batches of `batch`, feeding results to
/// `absorb` in trial order. After each complete batch `done` is asked
/// whether to stop; at most `max_trials` trials run. Returns the number of
/// trials absorbed.
pub fn run_batches<T, F, A, D>(root: &RngStream, batch: usize, max_trials: usize, trial: F, mut absorb: A, done: D) -> Result<usize>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> Result<T> + Sync,
    A: FnMut(T),
    D: Fn() -> bool,
{
    if batch == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    let mut next = 0;
    while next < max_trials {
        let end = (next + batch).min(max_trials);
        let results: Vec<T> = (next..end)
            .into_par_iter()
            .map(|i| trial(i, &mut root.fork(i as u64)))
            .collect::<Result<_>>()?;
        results.into_iter().for_each(&mut absorb);
        next = end;
        if done() {
            break;
        }
    }
    Ok(next)
}

/// Stable 64-bit tag for a sweep point, used as an RNG stream id.
pub fn point_stream(parts: &[u64]) -> u64 {
    parts.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &p| {
        let mut x = h ^ p;
        x = x.wrapping_mul(0x0000_0100_0000_01b3);
        x ^ (x >> 29)
    })
}

/// Write serializable rows as CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    write_rows(w, path, rows)
}

fn write_rows<W: std::io::Write, T: Serialize>(mut w: csv::Writer<W>, path: &Path, rows: &[T]) -> Result<()> {
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read rows written by [`write_csv`].
pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format {
            path: path.into(),
            msg: format!("{other:?}"),
        },
    }
}

/// Binomial standard error of an error rate.
pub fn rate_stderr(errors: u64, total: u64) -> f64 {
    if total == 0 {
        return f64::NAN;
    }
    let p = errors as f64 / total as f64;
    (p * (1.0 - p) / total as f64).sqrt()
}

/// Root-mean-square of `errors` and its delta-method standard error.
pub fn rmse_with_stderr(errors: &[f64]) -> (f64, f64) {
    let n = errors.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = sq.iter().sum::<f64>() / n as f64;
    let rmse = mse.sqrt();
    if n < 2 || rmse == 0.0 {
        return (rmse, 0.0);
    }
    let var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1) as f64;
    (rmse, (var / n as f64).sqrt() / (2.0 * rmse))
}

/// Output of one experiment, ready for CSV.
#[derive(Clone, Debug)]
pub enum Report {
    Papr(Vec<PaprRow>),
    Ber(Vec<BerRow>),
    Rate(Vec<RateRow>),
    Sense(Vec<SenseRow>),
    Train(Vec<HistoryRow>),
    Eval(Vec<EvalRow>),
}

impl Report {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        self.write_with(w, path)
    }

    /// Write the rows to any sink, e.g. standard output.
    pub fn write_to<W: std::io::Write>(&self, sink: W) -> Result<()> {
        self.write_with(csv::Writer::from_writer(sink), Path::new("<stdout>"))
    }

    fn write_with<W: std::io::Write>(&self, w: csv::Writer<W>, path: &Path) -> Result<()> {
        match self {
            Report::Papr(r) => write_rows(w, path, r),
            Report::Ber(r) => write_rows(w, path, r),
            Report::Rate(r) => write_rows(w, path, r),
            Report::Sense(r) => write_rows(w, path, r),
            Report::Train(r) => write_rows(w, path, r),
            Report::Eval(r) => write_rows(w, path, r),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Report::Papr(r) => r.len(),
            Report::Ber(r) => r.len(),
            Report::Rate(r) => r.len(),
            Report::Sense(r) => r.len(),
            Report::Train(r) => r.len(),
            Report::Eval(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Run the experiment described by `cfg` with its `seed`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::Papr => {
            let p = cfg.papr.clone().unwrap_or_default();
            Report::Papr(papr::rows(&run_papr(&p, cfg.seed)?, &p))
        }
        ExperimentKind::Ber => Report::Ber(run_ber(cfg)?),
        ExperimentKind::Rate => Report::Rate(run_rate(&cfg.rate.clone().unwrap_or_default(), cfg.seed)?),
        ExperimentKind::SenseRange | ExperimentKind::SenseVelocity => Report::Sense(run_sense(cfg)?),
        ExperimentKind::Train => Report::Train(run_train(cfg)?.history),
        ExperimentKind::Eval => Report::Eval(run_eval(cfg)?),
    })
}
