//! Scenario files.
//!
//! A scenario is a TOML document. Run-level keys (`horizon`, `seeds`,
//! `policy`, `n_mus`, `output_dir`) sit next to the market keys, which are
//! those of [`MarketConfig`]; every omitted key takes its default.

use std::fs;
use std::path::{Path, PathBuf};

use afl_core::market::{ConfigError, MarketConfig};
use afl_core::policy::PolicySpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Which policy each owner runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyAssignment {
    Uniform(String),
    PerOwner(Vec<String>),
}

impl Default for PolicyAssignment {
    fn default() -> Self {
        Self::Uniform("pas-afl".to_owned())
    }
}

impl PolicyAssignment {
    /// Directory and summary label: the policy name, or `mixed`.
    pub fn label(&self) -> String {
        match self {
            Self::Uniform(name) => name.clone(),
            Self::PerOwner(names) if names.windows(2).all(|w| w[0] == w[1]) && !names.is_empty() => names[0].clone(),
            Self::PerOwner(_) => "mixed".to_owned(),
        }
    }

    pub fn resolve(&self, n_dos: usize) -> Result<Vec<PolicySpec>, ConfigError> {
        let parse = |name: &str| PolicySpec::by_name(name).map_err(|e| ConfigError::new("policy", e.to_string()));
        match self {
            Self::Uniform(name) => Ok(vec![parse(name)?]),
            Self::PerOwner(names) => {
                if names.len() != n_dos {
                    return Err(ConfigError::new(
                        "policy",
                        format!("expected {n_dos} per-owner names, got {}", names.len()),
                    ));
                }
                names.iter().map(|n| parse(n)).collect()
            }
        }
    }
}

fn default_horizon() -> u32 {
    500
}

fn default_n_mus() -> usize {
    6
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub policy: PolicyAssignment,
    /// Must equal the length of `bidders.roster`.
    #[serde(default = "default_n_mus")]
    pub n_mus: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(flatten)]
    pub market: MarketConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            seeds: Vec::new(),
            policy: PolicyAssignment::default(),
            n_mus: default_n_mus(),
            output_dir: default_output_dir(),
            market: MarketConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::new("seeds", "at least one seed is required"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        self.market.validate()?;
        if self.n_mus != self.market.bidders.roster.len() {
            return Err(ConfigError::new(
                "n_mus",
                format!(
                    "is {} but the roster lists {} strategies",
                    self.n_mus,
                    self.market.bidders.roster.len()
                ),
            ));
        }
        self.policy.resolve(self.market.n_dos)?;
        Ok(())
    }

    /// Copy running a single policy on every owner.
    pub fn with_policy(&self, name: &str) -> Self {
        Self {
            policy: PolicyAssignment::Uniform(name.to_owned()),
            ..self.clone()
        }
    }

    /// Every field, defaults included, as TOML.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// Parses and validates scenario text; `origin` only labels errors.
pub fn parse_config(text: &str, origin: &Path) -> Result<ScenarioConfig, LoadError> {
    let parse_err = |message: String| LoadError::Parse {
        path: origin.to_owned(),
        message,
    };
    // flattening loses unknown-key detection at the top level, so check here
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let known = toml::Table::try_from(ScenarioConfig::default()).expect("default config serializes");
    if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
        return Err(parse_err(format!("unknown field `{key}`")));
    }
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, path)
}
