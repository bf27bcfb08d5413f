//! Experiment configuration: one TOML document with a section per module
//! plus the sweep and output settings.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::ScenarioConfig;
use crate::codebook::CodebookConfig;
use crate::error::{Error, Result};
use crate::estimation::TrainingConfig;
use crate::lens_array::{LensArrayConfig, UpaConfig};
use crate::linksim::SimConfig;
use crate::pdma::CombiningMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Csi {
    Perfect,
    Estimated,
}

/// Combining mode plus the channel knowledge it is designed with, written
/// `mrc-perfect`, `mmse-perfect` or `mrc-estimated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub mode: CombiningMode,
    pub csi: Csi,
}

impl Scheme {
    pub const MRC_PERFECT: Scheme = Scheme { mode: CombiningMode::Mrc, csi: Csi::Perfect };
    pub const MMSE_PERFECT: Scheme = Scheme { mode: CombiningMode::Mmse, csi: Csi::Perfect };
    pub const MRC_ESTIMATED: Scheme = Scheme { mode: CombiningMode::Mrc, csi: Csi::Estimated };

    pub fn label(&self) -> String {
        let csi = match self.csi {
            Csi::Perfect => "perfect",
            Csi::Estimated => "estimated",
        };
        format!("{}-{csi}", self.mode)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mrc-perfect" => Ok(Self::MRC_PERFECT),
            "mmse-perfect" => Ok(Self::MMSE_PERFECT),
            "mrc-estimated" => Ok(Self::MRC_ESTIMATED),
            other => Err(Error::InvalidConfig(format!(
                "unknown scheme {other:?}; expected mrc-perfect, mmse-perfect or mrc-estimated"
            ))),
        }
    }
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of BS RF chains: a count, or `"all"` for one per antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfChains {
    Count(usize),
    All,
}

impl RfChains {
    /// Chains actually used with `m_bs` antennas; counts above `m_bs` are capped.
    pub fn resolve(&self, m_bs: usize) -> usize {
        match self {
            RfChains::Count(n) => (*n).min(m_bs),
            RfChains::All => m_bs,
        }
    }
}

impl Serialize for RfChains {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RfChains::Count(n) => s.serialize_u64(*n as u64),
            RfChains::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for RfChains {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(RfChains::Count(n as usize)),
            Raw::Name(s) if s == "all" => Ok(RfChains::All),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("m_rf must be a count or \"all\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    MRf,
    KUsers,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::MRf => "m_rf",
            SweepAxis::KUsers => "k_users",
        })
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(SweepAxis::SnrDb),
            "m_rf" => Ok(SweepAxis::MRf),
            "k_users" => Ok(SweepAxis::KUsers),
            other => Err(Error::Parse(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    /// Grid values; for `m_rf` a value at or above the antenna count means all chains.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub lens: LensArrayConfig,
    pub upa: UpaConfig,
    #[serde(default)]
    pub codebook: CodebookConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub sim: SimConfig,
    pub m_rf: RfChains,
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Name of the built-in preset accepted wherever a config path is expected.
pub const PAPER_DEFAULTS: &str = "paper-defaults";

impl ExperimentConfig {
    /// 28 GHz, 500 MHz, 100 ns delay spread, K = 5 users with L = 3 paths at
    /// 100 m, 10 x 10 lens with full coverage (317 antennas), 10 RF chains,
    /// 4 x 4 mobile arrays with a 256-entry codebook, SNR from -20 to 10 dB.
    pub fn paper_defaults() -> Self {
        Self {
            scenario: ScenarioConfig::paper_default(5),
            lens: LensArrayConfig::full_coverage(10.0, 10.0),
            upa: UpaConfig::new(4, 4),
            codebook: CodebookConfig::default(),
            training: TrainingConfig {
                training_snr_db: 20.0,
                ..TrainingConfig::default()
            },
            sim: SimConfig::default(),
            m_rf: RfChains::Count(10),
            schemes: vec![Scheme::MRC_PERFECT, Scheme::MMSE_PERFECT, Scheme::MRC_ESTIMATED],
            sweep: Sweep {
                axis: SweepAxis::SnrDb,
                values: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            },
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or the built-in preset when `path` is `paper-defaults`.
    pub fn load(path: &Path) -> Result<Self> {
        if path.as_os_str() == PAPER_DEFAULTS {
            return Ok(Self::paper_defaults());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.lens.validate()?;
        self.upa.validate()?;
        self.codebook.validate()?;
        let mu = self.scenario.mu();
        self.training.validate(self.scenario.n_users, mu)?;
        self.sim.validate(mu)?;
        if let RfChains::Count(0) = self.m_rf {
            return Err(Error::InvalidConfig("m_rf must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("at least one scheme is required".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value".into()));
        }
        for &v in &self.sweep.values {
            self.at_axis_value_unchecked(v)?;
        }
        Ok(())
    }

    fn at_axis_value_unchecked(&self, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let count = || {
            if value.is_finite() && value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidConfig(format!("{} values must be positive integers, got {value}", self.sweep.axis)))
            }
        };
        match self.sweep.axis {
            SweepAxis::SnrDb => {
                if !value.is_finite() {
                    return Err(Error::InvalidConfig(format!("SNR must be finite, got {value}")));
                }
                cfg.sim.snr_db = value;
            }
            SweepAxis::MRf => cfg.m_rf = RfChains::Count(count()?),
            SweepAxis::KUsers => {
                cfg.scenario.n_users = count()?;
                cfg.scenario.validate()?;
                cfg.training.validate(cfg.scenario.n_users, cfg.scenario.mu())?;
            }
        }
        Ok(cfg)
    }

    /// The configuration of one grid point of the sweep.
    pub fn at_axis_value(&self, value: f64) -> Result<Self> {
        let cfg = self.at_axis_value_unchecked(value)?;
        cfg.scenario.validate()?;
        Ok(cfg)
    }
}
