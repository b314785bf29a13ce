//! Experiment configuration files (TOML, or JSON by extension).

use std::fmt;
use std::path::Path;

use hioco::{BaselineKind, Compression, DelayConfig, Mode, ScenarioSpec};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

/// A number, or `"auto"` to have it derived from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AutoOr {
    #[default]
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn resolve(self, auto: f64) -> f64 {
        match self {
            AutoOr::Auto => auto,
            AutoOr::Value(v) => v,
        }
    }
}

impl Serialize for AutoOr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = AutoOr;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"auto\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<AutoOr, E> {
                if v == "auto" {
                    Ok(AutoOr::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<AutoOr, E> {
                Ok(AutoOr::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<AutoOr, E> {
                Ok(AutoOr::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<AutoOr, E> {
                Ok(AutoOr::Value(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default)]
    pub alpha: AutoOr,
    #[serde(default)]
    pub gamma: AutoOr,
    pub j_l: usize,
    pub j_r: usize,
    #[serde(default)]
    pub compression: Compression,
    /// Defaults to local-delay mode exactly when `tau_l > 0`.
    #[serde(default)]
    pub mode: Option<Mode>,
}

/// Axes of a sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `[J_l, J_r]` pairs.
    #[serde(default)]
    pub steps: Vec<[usize; 2]>,
    /// Round-trip delays, realized as `tau_u = tau_r`, `tau_d = 0`.
    #[serde(default)]
    pub tau_r: Vec<usize>,
    #[serde(default)]
    pub tau_l: Vec<usize>,
    #[serde(default)]
    pub compression: Vec<Compression>,
    /// Extra rows, one per baseline and delay/compression combination.
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
}

impl SweepConfig {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
            && self.tau_r.is_empty()
            && self.tau_l.is_empty()
            && self.compression.is_empty()
            && self.baselines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub delay: DelayConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Checks that do not need the generated scenario.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: hioco::Error| CliError::Config(e.to_string());
        self.scenario.validate().map_err(cfg)?;
        self.delay.validate().map_err(cfg)?;
        self.algorithm.compression.validate().map_err(cfg)?;
        if self.algorithm.j_l + self.algorithm.j_r == 0 {
            return Err(CliError::Config("algorithm: j_l + j_r must be at least 1".into()));
        }
        if self.algorithm.mode == Some(Mode::ZeroLocalDelay) && self.delay.tau_l > 0 {
            return Err(CliError::Config(
                "algorithm.mode = zero-local-delay needs delay.tau_l = 0".into(),
            ));
        }
        if self.sweep.tau_r.contains(&0) {
            return Err(CliError::Config("sweep.tau_r entries must be at least 1".into()));
        }
        if self.sweep.steps.iter().any(|[l, r]| l + r == 0) {
            return Err(CliError::Config("sweep.steps entries need j_l + j_r >= 1".into()));
        }
        for c in &self.sweep.compression {
            c.validate().map_err(cfg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[scenario]
C = 2
dims = [2, 2]
m = 3
T = 20
mu = 1.0
seed = 5
drift = { kind = "random-walk", sigma = 0.1 }
feasible = [
  { kind = "ball", center = [0.0, 0.0], radius = 2.0 },
  { kind = "box", lower = [-1.0, -1.0], upper = [1.0, 1.0] },
]

[delay]
tau_u = 1
tau_d = 1

[algorithm]
alpha = "auto"
j_l = 1
j_r = 2
compression = { kind = "quantize", bits = 8, lo = -4.0, hi = 4.0 }

[sweep]
steps = [[1, 0], [2, 2]]
baselines = [{ kind = "master-only", steps = 2 }, { kind = "single-step" }]
"#;

    #[test]
    fn parses_sample_and_roundtrips() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.algorithm.alpha, AutoOr::Auto);
        assert_eq!(cfg.algorithm.gamma, AutoOr::Auto);
        assert_eq!(cfg.delay.tau_l, 0);
        assert_eq!(cfg.sweep.steps, vec![[1, 0], [2, 2]]);
        cfg.validate().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn numeric_alpha_and_bad_values() {
        let cfg = ExperimentConfig::from_toml(&SAMPLE.replace("\"auto\"", "3")).unwrap();
        assert_eq!(cfg.algorithm.alpha, AutoOr::Value(3.0));
        let err = ExperimentConfig::from_toml(&SAMPLE.replace("\"auto\"", "\"fast\"")).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        let err = ExperimentConfig::from_toml(&SAMPLE.replace("j_r = 2", "j_r = 2\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn cross_field_checks() {
        let cfg = ExperimentConfig::from_toml(&SAMPLE.replace("j_l = 1\nj_r = 2", "j_l = 0\nj_r = 0")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml(&SAMPLE.replace("tau_u = 1\ntau_d = 1", "tau_u = 0\ntau_d = 0")).unwrap();
        assert!(cfg.validate().is_err());
    }
}
