//! Experiment configuration files (TOML).
//!
//! ```toml
//! experiment = "ber"
//! seed = 7
//!
//! [frame]
//! subcarriers = 256
//! block_size = 128
//! blocks = 10
//! ref_spacing = 10
//! subcarrier_spacing = 7.68e6
//!
//! [channel]
//! type = "multipath-comm"
//! nlos = 4
//!
//! [ber]
//! waveforms = ["ofdm", "si-dfts-ofdm"]
//! methods = ["zf", "mmse"]
//! snr_db = [0.0, 5.0, 10.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::nn::dataset::PhaseNoise;
use crate::nn::receiver::ReceiverKind;
use crate::sensing::SensingGeometry;
use crate::waveform::{FrameConfig, Guard, Waveform};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Papr,
    Ber,
    Rate,
    SenseRange,
    SenseVelocity,
    Train,
    Eval,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Papr => "papr",
            ExperimentKind::Ber => "ber",
            ExperimentKind::Rate => "rate",
            ExperimentKind::SenseRange => "sense-range",
            ExperimentKind::SenseVelocity => "sense-velocity",
            ExperimentKind::Train => "train",
            ExperimentKind::Eval => "eval",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardKind {
    #[default]
    Cp,
    Fgi,
}

fn default_carrier() -> f64 {
    0.3e12
}

fn default_root() -> u64 {
    1
}

/// `[frame]`: numerology with the usual defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub subcarriers: usize,
    pub block_size: usize,
    pub blocks: usize,
    pub ref_spacing: usize,
    pub subcarrier_spacing: f64,
    #[serde(default = "default_carrier")]
    pub carrier: f64,
    #[serde(default)]
    pub guard: GuardKind,
    /// FGI tail symbols `K_p`; defaults to `L/4`.
    pub ref_symbols: Option<usize>,
    /// CP length in samples; defaults to `N/4`.
    pub cp_samples: Option<usize>,
    #[serde(default = "default_root")]
    pub zc_root: u64,
}

impl FrameSection {
    pub fn to_frame(&self) -> Result<FrameConfig> {
        let mut cfg = match self.guard {
            GuardKind::Cp => {
                if self.ref_symbols.is_some_and(|k| k != 0) {
                    return Err(Error::InvalidConfig("ref_symbols applies to the FGI guard only".into()));
                }
                FrameConfig::cp(self.subcarriers, self.block_size, self.blocks, self.ref_spacing, self.subcarrier_spacing)
            }
            GuardKind::Fgi => {
                if self.cp_samples.is_some() {
                    return Err(Error::InvalidConfig("cp_samples applies to the CP guard only".into()));
                }
                FrameConfig::fgi(
                    self.subcarriers,
                    self.block_size,
                    self.ref_symbols.unwrap_or(self.block_size / 4),
                    self.blocks,
                    self.ref_spacing,
                    self.subcarrier_spacing,
                )
            }
        };
        if let Some(samples) = self.cp_samples {
            cfg.guard = Guard::Cp { samples };
        }
        cfg.carrier = self.carrier;
        cfg.zc_root = self.zc_root;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn both_waveforms() -> Vec<Waveform> {
    vec![Waveform::Ofdm, Waveform::SiDftsOfdm]
}

fn default_papr_sizes() -> Vec<usize> {
    vec![64, 1024]
}

fn default_papr_guards() -> Vec<GuardKind> {
    vec![GuardKind::Cp]
}

fn half() -> f64 {
    0.5
}

fn quarter() -> f64 {
    0.25
}

fn one() -> usize {
    1
}

fn papr_blocks() -> usize {
    100_000
}

fn papr_step() -> f64 {
    0.1
}

fn papr_max() -> f64 {
    14.0
}

/// `[papr]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaprConfig {
    #[serde(default = "both_waveforms")]
    pub waveforms: Vec<Waveform>,
    /// IDFT sizes `N`.
    #[serde(default = "default_papr_sizes")]
    pub subcarriers: Vec<usize>,
    /// `L / N`.
    #[serde(default = "half")]
    pub block_fraction: f64,
    /// `K_p / L` for FGI frames.
    #[serde(default = "quarter")]
    pub ref_fraction: f64,
    /// Guards evaluated for SI-DFT-s-OFDM (OFDM always uses a CP).
    #[serde(default = "default_papr_guards")]
    pub guards: Vec<GuardKind>,
    /// Data blocks per series.
    #[serde(default = "papr_blocks")]
    pub blocks: usize,
    /// Time-domain oversampling factor; 1 is the plain N-sample IDFT.
    #[serde(default = "one")]
    pub oversample: usize,
    #[serde(default = "papr_step")]
    pub step_db: f64,
    #[serde(default = "papr_max")]
    pub max_db: f64,
}

impl Default for PaprConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BerMethod {
    Zf,
    Mmse,
    /// Network receiver loaded from `checkpoint`.
    Nn,
}

impl BerMethod {
    pub fn label(self) -> &'static str {
        match self {
            BerMethod::Zf => "zf",
            BerMethod::Mmse => "mmse",
            BerMethod::Nn => "nn",
        }
    }
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

fn min_errors() -> u64 {
    100
}

fn max_bits() -> u64 {
    10_000_000
}

fn batch() -> usize {
    32
}

/// `[ber]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerConfig {
    #[serde(default = "both_waveforms")]
    pub waveforms: Vec<Waveform>,
    pub methods: Vec<BerMethod>,
    /// Per-sample SNR of the received signal, dB.
    pub snr_db: Vec<f64>,
    /// Phase-noise increment variances swept at every SNR.
    #[serde(default = "zero_list")]
    pub pn_variance: Vec<f64>,
    /// Stop a point after this many bit errors...
    #[serde(default = "min_errors")]
    pub min_errors: u64,
    /// ...or this many bits, whichever comes first.
    #[serde(default = "max_bits")]
    pub max_bits: u64,
    /// Frames simulated between stopping checks.
    #[serde(default = "batch")]
    pub batch: usize,
    pub checkpoint: Option<PathBuf>,
}

fn rate_bandwidth() -> f64 {
    30e9
}

fn rate_snr() -> f64 {
    20.0
}

fn rate_symbol() -> f64 {
    0.13e-6
}

fn rate_cp() -> f64 {
    0.032e-6
}

fn rate_n() -> usize {
    64
}

fn rate_draws() -> usize {
    10_000
}

/// `[rate]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default = "rate_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "rate_snr")]
    pub snr_db: f64,
    /// Useful symbol duration `T`, s.
    #[serde(default = "rate_symbol")]
    pub symbol_duration: f64,
    /// CP duration, s.
    #[serde(default = "rate_cp")]
    pub cp_duration: f64,
    /// IDFT size quantizing the FGI length.
    #[serde(default = "rate_n")]
    pub subcarriers: usize,
    /// Delay-spread draws, uniform in `(0, max_delay_fraction · T]`.
    #[serde(default = "rate_draws")]
    pub draws: usize,
    #[serde(default = "quarter")]
    pub max_delay_fraction: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    Periodogram,
    Music,
    /// Network receiver loaded from `checkpoint`.
    Nn,
}

impl EstimatorName {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorName::Periodogram => "periodogram",
            EstimatorName::Music => "music",
            EstimatorName::Nn => "nn",
        }
    }
}

fn sense_trials() -> usize {
    500
}

fn zero_pad() -> usize {
    crate::sensing::DEFAULT_ZERO_PAD
}

fn music_points() -> usize {
    4096
}

fn monostatic() -> SensingGeometry {
    SensingGeometry::Monostatic
}

/// `[sense]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseConfig {
    pub estimators: Vec<EstimatorName>,
    /// Per-element SNR of the reference-block CFR, dB.
    pub snr_db: Vec<f64>,
    #[serde(default = "sense_trials")]
    pub trials: usize,
    #[serde(default = "monostatic")]
    pub geometry: SensingGeometry,
    /// Use only the first `subcarriers` CFR columns (`K`).
    pub subcarriers: Option<usize>,
    /// Use only the first `ref_blocks` CFR rows (`M_RB`).
    pub ref_blocks: Option<usize>,
    #[serde(default = "zero_pad")]
    pub zero_pad: usize,
    #[serde(default = "music_points")]
    pub music_points: usize,
    pub music_window: Option<usize>,
    pub checkpoint: Option<PathBuf>,
}

/// Dataset draws shared by `[train]` and `[eval]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub size: usize,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub phase_noise: PhaseNoise,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Optional layer-size overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchOverrides {
    pub shared: Option<Vec<usize>>,
    pub comm_hidden: Option<Vec<usize>>,
    pub sense_hidden: Option<Vec<usize>>,
    pub batchnorm: Option<bool>,
}

fn epochs() -> usize {
    40
}

fn batch_size() -> usize {
    128
}

fn lr() -> f64 {
    1e-3
}

fn unit() -> f64 {
    1.0
}

fn group_width() -> usize {
    16
}

/// `[train]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub receiver: ReceiverKind,
    pub data: DataSection,
    /// Where the trained receiver is written.
    pub checkpoint: PathBuf,
    #[serde(default = "epochs")]
    pub epochs: usize,
    /// Level-1 epochs of the two-level receiver; defaults to `epochs`.
    pub level1_epochs: Option<usize>,
    #[serde(default = "batch_size")]
    pub batch_size: usize,
    #[serde(default = "lr")]
    pub lr: f64,
    /// Learning rate multiplier applied after every epoch.
    #[serde(default = "unit")]
    pub lr_decay: f64,
    #[serde(default = "unit")]
    pub a1: f64,
    #[serde(default = "unit")]
    pub a2: f64,
    /// Communication outputs per group model.
    #[serde(default = "group_width")]
    pub group_width: usize,
    #[serde(default)]
    pub arch: ArchOverrides,
    #[serde(default)]
    pub level1_arch: ArchOverrides,
    /// Also write the generated training set here.
    pub dataset_out: Option<PathBuf>,
}

/// `[eval]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub checkpoint: PathBuf,
    /// Rows generated per SNR value.
    pub size: usize,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub phase_noise: PhaseNoise,
}

/// One experiment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub frame: Option<FrameSection>,
    pub channel: Option<Scenario>,
    pub papr: Option<PaprConfig>,
    pub ber: Option<BerConfig>,
    pub rate: Option<RateConfig>,
    pub sense: Option<SenseConfig>,
    pub train: Option<TrainSection>,
    pub eval: Option<EvalSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn frame(&self) -> Result<FrameConfig> {
        self.frame
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} needs a [frame] section", self.experiment.label())))?
            .to_frame()
    }

    pub fn channel(&self) -> Result<&Scenario> {
        self.channel
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} needs a [channel] section", self.experiment.label())))
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} needs a [{name}] section", self.experiment.label())))
    }

    pub fn ber(&self) -> Result<&BerConfig> {
        self.section(&self.ber, "ber")
    }

    pub fn sense(&self) -> Result<&SenseConfig> {
        self.section(&self.sense, "sense")
    }

    pub fn train(&self) -> Result<&TrainSection> {
        self.section(&self.train, "train")
    }

    pub fn eval(&self) -> Result<&EvalSection> {
        self.section(&self.eval, "eval")
    }

    /// Check the sections the experiment needs.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        match self.experiment {
            ExperimentKind::Papr => {
                let p = self.papr.clone().unwrap_or_default();
                if p.blocks == 0 {
                    return bad("papr.blocks must be at least 1");
                }
                if p.waveforms.is_empty() || p.subcarriers.is_empty() || p.guards.is_empty() {
                    return bad("papr needs waveforms, subcarriers and guards");
                }
                if !(p.step_db > 0.0) || !(p.max_db > 0.0) || p.oversample == 0 {
                    return bad("papr step_db, max_db and oversample must be positive");
                }
            }
            ExperimentKind::Ber => {
                self.frame()?;
                self.channel()?;
                let b = self.ber()?;
                if b.snr_db.is_empty() || b.pn_variance.is_empty() || b.methods.is_empty() || b.waveforms.is_empty() {
                    return bad("ber needs at least one waveform, method, SNR and phase-noise value");
                }
                if b.max_bits == 0 || b.batch == 0 {
                    return bad("ber.max_bits and ber.batch must be at least 1");
                }
                if b.methods.contains(&BerMethod::Nn) && b.checkpoint.is_none() {
                    return bad("the nn method needs ber.checkpoint");
                }
            }
            ExperimentKind::Rate => {
                let r = self.rate.clone().unwrap_or_default();
                if !(r.bandwidth_hz > 0.0) {
                    return bad("rate.bandwidth_hz must be positive");
                }
                if r.draws == 0 || r.subcarriers == 0 {
                    return bad("rate.draws and rate.subcarriers must be at least 1");
                }
                if !(r.symbol_duration > 0.0) || !(r.cp_duration >= 0.0) || !(r.max_delay_fraction > 0.0) {
                    return bad("rate durations must be positive");
                }
            }
            ExperimentKind::SenseRange | ExperimentKind::SenseVelocity => {
                self.frame()?;
                self.channel()?;
                let s = self.sense()?;
                if s.trials == 0 {
                    return bad("sense.trials must be at least 1");
                }
                if s.snr_db.is_empty() || s.estimators.is_empty() {
                    return bad("sense needs at least one estimator and SNR value");
                }
                if s.estimators.contains(&EstimatorName::Nn) && s.checkpoint.is_none() {
                    return bad("the nn estimator needs sense.checkpoint");
                }
            }
            ExperimentKind::Train => {
                self.frame()?;
                self.channel()?;
                let t = self.train()?;
                if t.data.size == 0 || t.data.snr_db.is_empty() {
                    return bad("train.data needs a positive size and at least one SNR value");
                }
            }
            ExperimentKind::Eval => {
                self.channel()?;
                let e = self.eval()?;
                if e.size == 0 || e.snr_db.is_empty() {
                    return bad("eval needs a positive size and at least one SNR value");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BER: &str = r#"
experiment = "ber"
seed = 3

[frame]
subcarriers = 256
block_size = 128
blocks = 10
ref_spacing = 10
subcarrier_spacing = 7.68e6

[channel]
type = "multipath-comm"
nlos = 4

[ber]
methods = ["zf", "mmse"]
snr_db = [0.0, 10.0]
"#;

    #[test]
    fn parses_a_ber_file_with_defaults() {
        let cfg = ExperimentConfig::parse(BER).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Ber);
        assert_eq!(cfg.seed, 3);
        let f = cfg.frame().unwrap();
        assert_eq!(f, FrameConfig::cp(256, 128, 10, 10, 7.68e6));
        assert_eq!(cfg.channel().unwrap(), &Scenario::multipath(4));
        let b = cfg.ber().unwrap();
        assert_eq!(b.waveforms, both_waveforms());
        assert_eq!(b.pn_variance, vec![0.0]);
        assert_eq!((b.min_errors, b.max_bits), (100, 10_000_000));
    }

    #[test]
    fn fgi_frames_default_the_tail() {
        let s: FrameSection = toml::from_str(
            "subcarriers = 64\nblock_size = 32\nblocks = 4\nref_spacing = 2\nsubcarrier_spacing = 1.92e6\nguard = \"fgi\"",
        )
        .unwrap();
        assert_eq!(s.to_frame().unwrap(), FrameConfig::fgi(64, 32, 8, 4, 2, 1.92e6));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ExperimentConfig::parse("experiment = \"bogus\"").is_err());
        assert!(ExperimentConfig::parse(&BER.replace("snr_db = [0.0, 10.0]", "snr_db = []")).is_err());
        assert!(ExperimentConfig::parse(&BER.replace("methods = [\"zf\", \"mmse\"]", "methods = [\"nn\"]")).is_err());
        assert!(ExperimentConfig::parse(&BER.replace("[channel]\ntype = \"multipath-comm\"\nnlos = 4", "")).is_err());
        assert!(ExperimentConfig::parse(&format!("{BER}\nunknown = 1")).is_err());
        assert!(ExperimentConfig::parse(&BER.replace("block_size = 128", "block_size = 512")).is_err());
        let err = ExperimentConfig::load(Path::new("/nonexistent/cfg.toml")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn optional_sections_default() {
        let cfg = ExperimentConfig::parse("experiment = \"rate\"").unwrap();
        assert!(cfg.rate.is_none());
        let r = RateConfig::default();
        assert_eq!((r.bandwidth_hz, r.snr_db, r.subcarriers), (30e9, 20.0, 64));
        assert_eq!(PaprConfig::default().blocks, 100_000);
        assert!(ExperimentConfig::parse("experiment = \"papr\"\n[papr]\nblocks = 0").is_err());
    }
}
