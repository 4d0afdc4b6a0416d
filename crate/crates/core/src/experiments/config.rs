//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{load_triple, MarkovTriple};

/// Which harness a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Theorem1,
    Corollary1,
    Lemma2,
    Lemma3,
    Lemma5,
    Shortcut,
    Semicontinuity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Theorem1,
        ExperimentKind::Corollary1,
        ExperimentKind::Lemma2,
        ExperimentKind::Lemma3,
        ExperimentKind::Lemma5,
        ExperimentKind::Shortcut,
        ExperimentKind::Semicontinuity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::Corollary1 => "corollary1",
            ExperimentKind::Lemma2 => "lemma2",
            ExperimentKind::Lemma3 => "lemma3",
            ExperimentKind::Lemma5 => "lemma5",
            ExperimentKind::Shortcut => "shortcut",
            ExperimentKind::Semicontinuity => "semicontinuity",
        }
    }

    /// The `eta` used when a configuration leaves it out.
    pub fn default_eta(self) -> EtaSpec {
        match self {
            ExperimentKind::Lemma2 | ExperimentKind::Lemma5 => EtaSpec::Pinsker32,
            _ => EtaSpec::Half,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// `eta` as a number or as a preset derived from `gamma` (read as `epsilon`
/// by the lemma harnesses) and the model's log-moment bound `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    #[serde(with = "preset")]
    Preset(Preset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `gamma / 2`.
    Half,
    /// `epsilon^2 / 32`.
    Pinsker32,
    /// `epsilon^2 / ((0.5 + C)^2 * 2 ln 2)`.
    Lemma4,
}

#[allow(non_upper_case_globals)]
impl EtaSpec {
    pub const Half: EtaSpec = EtaSpec::Preset(Preset::Half);
    pub const Pinsker32: EtaSpec = EtaSpec::Preset(Preset::Pinsker32);
    pub const Lemma4: EtaSpec = EtaSpec::Preset(Preset::Lemma4);

    pub fn resolve(self, gamma: f64, moment_bound: f64) -> f64 {
        match self {
            EtaSpec::Value(v) => v,
            EtaSpec::Preset(Preset::Half) => gamma / 2.0,
            EtaSpec::Preset(Preset::Pinsker32) => gamma * gamma / 32.0,
            EtaSpec::Preset(Preset::Lemma4) => {
                gamma * gamma / ((0.5 + moment_bound).powi(2) * 2.0 * std::f64::consts::LN_2)
            }
        }
    }
}

impl FromStr for EtaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half" => Ok(EtaSpec::Half),
            "pinsker32" => Ok(EtaSpec::Pinsker32),
            "lemma4" => Ok(EtaSpec::Lemma4),
            _ => s
                .parse::<f64>()
                .map(EtaSpec::Value)
                .map_err(|_| format!("`{s}` is neither a number nor one of half, pinsker32, lemma4")),
        }
    }
}

mod preset {
    use super::Preset;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Preset, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match p {
            Preset::Half => "half",
            Preset::Pinsker32 => "pinsker32",
            Preset::Lemma4 => "lemma4",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Preset, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "half" => Ok(Preset::Half),
            "pinsker32" => Ok(Preset::Pinsker32),
            "lemma4" => Ok(Preset::Lemma4),
            other => Err(de::Error::custom(format!("unknown eta preset `{other}`"))),
        }
    }
}

/// On-disk form of an [`ExperimentConfig`]. `model` is resolved relative to
/// the directory holding the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    pub gamma: f64,
    #[serde(default)]
    pub eta: Option<EtaSpec>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    pub variant: ExperimentKind,
}

fn default_trials() -> u64 {
    1000
}

/// A validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Absent only for `semicontinuity`, which builds its own families.
    pub model: Option<MarkovTriple>,
    /// Sample sizes; for `semicontinuity` the `m` grid.
    pub n_grid: Vec<usize>,
    /// `gamma` for the theorem harnesses, `epsilon` for the lemmas, and the
    /// largest `t` for `shortcut`.
    pub gamma: f64,
    pub eta: f64,
    pub trials: u64,
    pub seed: u64,
    pub variant: ExperimentKind,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(model: MarkovTriple, variant: ExperimentKind, n_grid: Vec<usize>, gamma: f64, eta: EtaSpec) -> Result<Self> {
        let eta = eta.resolve(gamma, model.log_moment_bound());
        let cfg = ExperimentConfig {
            model: Some(model),
            n_grid,
            gamma,
            eta,
            trials: default_trials(),
            seed: 0,
            variant,
            workers: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_trials(mut self, trials: u64) -> Result<Self> {
        self.trials = trials;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn model(&self) -> Result<&MarkovTriple> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::field("model", format!("required by {}", self.variant)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::field("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::field("eta", format!("must be positive, got {}", self.eta)));
        }
        if self.trials == 0 {
            return Err(Error::field("trials", "must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::field("n_grid", "must not be empty"));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::field("n_grid", "entries must be positive"));
        }
        if self.variant != ExperimentKind::Semicontinuity && self.model.is_none() {
            return Err(Error::field("model", format!("required by {}", self.variant)));
        }
        Ok(())
    }

    /// Resolve a parsed file; relative model paths are taken from `base`.
    pub fn from_file(file: ConfigFile, base: &Path) -> Result<Self> {
        let model = match &file.model {
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                Some(load_triple(&path).map_err(|e| Error::field("model", e.to_string()))?)
            }
            None => None,
        };
        let c = model.as_ref().map_or(0.0, |m| m.log_moment_bound());
        let eta = file.eta.unwrap_or_else(|| file.variant.default_eta()).resolve(file.gamma, c);
        let cfg = ExperimentConfig {
            model,
            n_grid: file.n_grid,
            gamma: file.gamma,
            eta,
            trials: file.trials,
            seed: file.seed,
            variant: file.variant,
            workers: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ConfigFile = serde_json::from_str(&text)?;
        Self::from_file(file, path.parent().unwrap_or(Path::new(".")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_presets() {
        assert_eq!(EtaSpec::Half.resolve(0.25, 0.0), 0.125);
        assert_eq!(EtaSpec::Pinsker32.resolve(0.25, 0.0), 0.25 * 0.25 / 32.0);
        let c = 1.0;
        let v = EtaSpec::Lemma4.resolve(0.3, c);
        // plugging back into the bound recovers epsilon
        assert!(((0.5 + c) * (2.0 * v * std::f64::consts::LN_2).sqrt() - 0.3).abs() < 1e-12);
        assert_eq!("0.05".parse::<EtaSpec>().unwrap(), EtaSpec::Value(0.05));
        assert!("fast".parse::<EtaSpec>().is_err());
    }

    #[test]
    fn parses_file_form() {
        let f: ConfigFile = serde_json::from_str(
            r#"{"model":"bsc.json","n_grid":[100,1000],"gamma":0.25,"eta":"pinsker32","trials":10,"seed":7,"variant":"lemma2"}"#,
        )
        .unwrap();
        assert_eq!(f.eta, Some(EtaSpec::Pinsker32));
        assert_eq!(f.variant, ExperimentKind::Lemma2);
        let f: ConfigFile = serde_json::from_str(r#"{"n_grid":[2],"gamma":0.1,"eta":0.01,"variant":"semicontinuity"}"#).unwrap();
        assert_eq!(f.eta, Some(EtaSpec::Value(0.01)));
        let cfg = ExperimentConfig::from_file(f, Path::new(".")).unwrap();
        assert!(cfg.model.is_none());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"gamma":0.1,"variant":"theorem1","colour":1}"#).is_err());
    }

    #[test]
    fn validation_names_fields() {
        let bad = ConfigFile {
            model: None,
            n_grid: vec![10],
            gamma: -1.0,
            eta: None,
            trials: 1,
            seed: 0,
            variant: ExperimentKind::Semicontinuity,
        };
        let err = ExperimentConfig::from_file(bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }
}
