//! Achievable rate of CP and FGI framing versus channel delay spread.
//!
//! Model: `R = B log2(1 + SNR) (1 − overhead)`. A CP costs
//! `T_cp / (T + T_cp)` regardless of the channel; the FGI length adapts to
//! the delay spread `d` and costs `⌈d N / T⌉ / N`. Reference blocks are
//! identical in both schemes and left out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RateConfig;
use crate::numerics::{self, RngStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cp,
    Fgi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scheme: Scheme,
    /// Seconds.
    pub delay_spread: f64,
    pub rate_bps: f64,
}

fn shannon(cfg: &RateConfig) -> Result<f64> {
    if !(cfg.bandwidth_hz > 0.0 && cfg.bandwidth_hz.is_finite()) {
        return Err(Error::InvalidConfig(format!("bandwidth {} Hz", cfg.bandwidth_hz)));
    }
    Ok(cfg.bandwidth_hz * (1.0 + numerics::db_to_linear(cfg.snr_db)).log2())
}

pub fn cp_rate(cfg: &RateConfig) -> Result<f64> {
    Ok(shannon(cfg)? * (1.0 - cfg.cp_duration / (cfg.symbol_duration + cfg.cp_duration)))
}

pub fn fgi_rate(cfg: &RateConfig, delay_spread: f64) -> Result<f64> {
    let n = cfg.subcarriers as f64;
    let guard = (delay_spread * n / cfg.symbol_duration).ceil() / n;
    Ok(shannon(cfg)? * (1.0 - guard))
}

/// Draw delay spreads uniformly in `(0, max_delay_fraction · T]` and
/// emit the CP and FGI rate for each draw.
pub fn run_rate(cfg: &RateConfig, seed: u64) -> Result<Vec<RateRow>> {
    let mut rng = RngStream::new(seed, 0x7a7e);
    let max = cfg.max_delay_fraction * cfg.symbol_duration;
    let cp = cp_rate(cfg)?;
    let mut rows = Vec::with_capacity(2 * cfg.draws);
    for _ in 0..cfg.draws {
        let d = max * (1.0 - rng.random::<f64>());
        rows.push(RateRow {
            scheme: Scheme::Cp,
            delay_spread: d,
            rate_bps: cp,
        });
        rows.push(RateRow {
            scheme: Scheme::Fgi,
            delay_spread: d,
            rate_bps: fgi_rate(cfg, d)?,
        });
    }
    Ok(rows)
}

/// Mean rate of one scheme over the rows.
pub fn mean_rate(rows: &[RateRow], scheme: Scheme) -> f64 {
    let (sum, n) = rows
        .iter()
        .filter(|r| r.scheme == scheme)
        .fold((0.0, 0usize), |(s, n), r| (s + r.rate_bps, n + 1));
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp_rate_matches_hand_evaluation() {
        let cfg = RateConfig::default();
        // 30e9 · log2(101) · 0.13 / 0.162
        let want = 30e9 * 101f64.log2() * (0.13 / 0.162);
        assert!((cp_rate(&cfg).unwrap() - want).abs() < 1.0);
        assert!((cp_rate(&cfg).unwrap() / 1e9 - 160.3).abs() < 0.1);
    }

    #[test]
    fn fgi_overhead_is_quantized() {
        let cfg = RateConfig::default();
        let full = shannon(&cfg).unwrap();
        let t = cfg.symbol_duration;
        assert!((fgi_rate(&cfg, t / 64.0 * (1.0 - 1e-9)).unwrap() - full * 63.0 / 64.0).abs() < 1e-3);
        assert!((fgi_rate(&cfg, t / 64.0 * (1.0 + 1e-9)).unwrap() - full * 62.0 / 64.0).abs() < 1e-3);
        assert!((fgi_rate(&cfg, t / 4.0 * (1.0 - 1e-9)).unwrap() - full * 0.75).abs() < 1e-3);
        let bad = RateConfig { bandwidth_hz: 0.0, ..cfg };
        assert!(run_rate(&bad, 1).is_err());
    }

    #[test]
    fn rows_are_reproducible() {
        let cfg = RateConfig { draws: 100, ..RateConfig::default() };
        let a = run_rate(&cfg, 3).unwrap();
        assert_eq!(a, run_rate(&cfg, 3).unwrap());
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|r| r.delay_spread > 0.0 && r.delay_spread <= cfg.symbol_duration / 4.0));
        assert!(mean_rate(&a, Scheme::Fgi) > mean_rate(&a, Scheme::Cp));
    }
}
