//! Experiment configuration, read from TOML.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::channel::ChannelScenario;
use crate::error::{Error, Result};
use crate::optimizer::{CccpSettings, InitMode, SelectionSettings};
use crate::parallel::Execution;
use crate::rates::{Metric, UtilitySpec};
use crate::streams::SeaMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Capacity,
    Zf,
    Unicast,
    OneLayerRs,
    RsJd,
    RsSdExhaustive,
    RsSdSelected,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [Scheme::Capacity, Scheme::Zf, Scheme::Unicast, Scheme::OneLayerRs, Scheme::RsJd, Scheme::RsSdExhaustive, Scheme::RsSdSelected];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::Capacity => "capacity",
            Scheme::Zf => "zf",
            Scheme::Unicast => "unicast",
            Scheme::OneLayerRs => "one-layer-rs",
            Scheme::RsJd => "rs-jd",
            Scheme::RsSdExhaustive => "rs-sd-exhaustive",
            Scheme::RsSdSelected => "rs-sd-selected",
        }
    }

    /// Whether the scheme optimizes precoders (and so can use the CSIT regularizer).
    pub fn is_optimized(self) -> bool {
        !matches!(self, Scheme::Capacity | Scheme::Zf)
    }
}

/// A scheme plus whether its optimization uses the imperfect-CSIT
/// regularizer. Written as `rs-sd-selected` or `rs-sd-selected/noreg`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub regularized: bool,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, regularized: true }
    }

    pub fn unregularized(scheme: Scheme) -> Self {
        Self { scheme, regularized: false }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.scheme.tag())?;
        if !self.regularized {
            f.write_str("/noreg")?;
        }
        Ok(())
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, regularized) = match s.strip_suffix("/noreg") {
            Some(base) => (base, false),
            None => (s, true),
        };
        let scheme = Scheme::ALL
            .into_iter()
            .find(|c| c.tag() == name)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))?;
        if !regularized && !scheme.is_optimized() {
            return Err(Error::Config(format!("scheme `{name}` has no regularized variant")));
        }
        Ok(Self { scheme, regularized })
    }
}

impl Serialize for SchemeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SchemeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Overrides of the outer-loop settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CccpOverrides {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub starts: Option<Vec<InitMode>>,
    /// Inner interior-point duality-gap tolerance.
    pub solver_tolerance: Option<f64>,
}

impl CccpOverrides {
    pub fn apply(&self, mut s: CccpSettings) -> CccpSettings {
        if let Some(v) = self.tolerance {
            s.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            s.max_iterations = v;
        }
        if let Some(v) = &self.starts {
            s.starts = v.clone();
        }
        if let Some(v) = self.solver_tolerance {
            s.solver.tolerance = v;
        }
        s
    }
}

fn default_trials() -> usize {
    50
}

fn default_seed() -> u64 {
    1
}

fn default_sigma2() -> Vec<f64> {
    vec![0.0]
}

fn default_metric() -> Metric {
    Metric::SumRate
}

fn default_timeout() -> f64 {
    300.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub schemes: Vec<SchemeSpec>,
    pub users: usize,
    pub antennas: usize,
    pub channel: ChannelScenario,
    /// Transmit power grid in dB (`P = 10^(dB/10)`).
    pub p_db: Vec<f64>,
    /// CSIT error variances; nonzero values need i.i.d. channels.
    #[serde(default = "default_sigma2")]
    pub sigma2: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub targets: Vec<f64>,
    /// Stream budget for `rs-sd-selected` (defaults to `2^K − 1`).
    #[serde(default)]
    pub n_sea: Option<usize>,
    #[serde(default)]
    pub sea_mode: SeaMode,
    #[serde(default)]
    pub max_collections: Option<usize>,
    /// Start each richer scheme from the poorer scheme's precoders
    /// (unicast → one-layer RS → general RS) when both are requested.
    #[serde(default = "default_true")]
    pub warm_start_chain: bool,
    /// Wall-clock budget per row in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default)]
    pub cccp: CccpOverrides,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(Error::Config(m.to_string()));
        if self.schemes.is_empty() {
            return cfg("scheme list is empty");
        }
        if self.p_db.is_empty() || self.sigma2.is_empty() {
            return cfg("power and error-variance grids must be nonempty");
        }
        if self.trials == 0 {
            return cfg("trials must be at least 1");
        }
        if self.users == 0 || self.antennas == 0 {
            return cfg("users and antennas must be positive");
        }
        if self.p_db.iter().any(|p| !p.is_finite()) {
            return cfg("power grid entries must be finite");
        }
        if self.sigma2.iter().any(|s| !(0.0..1.0).contains(s)) {
            return cfg("error variances must lie in [0, 1)");
        }
        if self.sigma2.iter().any(|&s| s > 0.0) && !matches!(self.channel, ChannelScenario::Iid) {
            return cfg("imperfect CSIT is modelled for i.i.d. channels only");
        }
        if !(self.timeout_s > 0.0) {
            return cfg("timeout must be positive");
        }
        if let ChannelScenario::OneRing(s) = &self.channel {
            s.validate(self.users)?;
        }
        if let Some(n) = self.n_sea {
            if n < self.users {
                return cfg("n_sea must be at least the number of users");
            }
        }
        self.utility().validate(self.users)?;
        Ok(())
    }

    pub fn utility(&self) -> UtilitySpec {
        UtilitySpec { metric: self.metric, weights: self.weights.clone(), targets: self.targets.clone() }
    }

    pub fn selection(&self) -> SelectionSettings {
        let n = self.n_sea.unwrap_or((1usize << self.users.min(16)) - 1);
        SelectionSettings { n_sea: n, sea_mode: self.sea_mode, max_collections: self.max_collections }
    }

    pub fn cccp_settings(&self, execution: Execution) -> CccpSettings {
        let mut s = self.cccp.apply(CccpSettings::default());
        s.execution = execution;
        s
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    /// Builds a config from a TOML value. A top-level `preset = "NAME"` key
    /// starts from that preset and overrides it key by key.
    pub fn from_value(value: toml::Value) -> Result<Self> {
        let mut value = value;
        let base = match &mut value {
            toml::Value::Table(t) => t.remove("preset"),
            _ => return Err(Error::Config("config must be a table".into())),
        };
        let merged = match base {
            Some(toml::Value::String(name)) => {
                let preset = super::presets::preset(&name)?;
                let mut base = toml::Value::try_from(&preset).map_err(|e| Error::Config(e.to_string()))?;
                merge(&mut base, value);
                base
            }
            Some(_) => return Err(Error::Config("`preset` must be a string".into())),
            None => value,
        };
        let cfg: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
pub fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    // a different channel kind replaces the whole section
                    Some(existing) if k != "channel" || same_kind(existing, &v) => merge(existing, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn same_kind(a: &toml::Value, b: &toml::Value) -> bool {
    match (a.get("kind"), b.get("kind")) {
        (Some(x), Some(y)) => x == y,
        (_, None) => true,
        _ => false,
    }
}
