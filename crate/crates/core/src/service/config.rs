use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Service configuration, read from a TOML file.
///
/// ```toml
/// data_dir = "data"
/// port = 8080
/// spec_path = "policy/iit.norm"
///
/// [urgency]
/// red_days = 7
/// yellow_days = 21
///
/// [decision_period]
/// default_days = 56
/// per_type = { IIT = 56 }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bind: String,
    pub port: u16,
    /// Spec file of the policy bundle; the built-in IIT bundle when unset.
    pub spec_path: Option<PathBuf>,
    pub urgency: UrgencyThresholds,
    pub decision_period: DecisionPeriod,
    pub max_tree_depth: usize,
    /// Load the bundle's seed fixtures into an empty store.
    pub seed_fixtures: bool,
    /// Write a snapshot after this many logged records.
    pub snapshot_every: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            bind: "127.0.0.1".into(),
            port: 8080,
            spec_path: None,
            urgency: UrgencyThresholds::default(),
            decision_period: DecisionPeriod::default(),
            max_tree_depth: crate::simulation::DEFAULT_MAX_DEPTH,
            seed_fixtures: true,
            snapshot_every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UrgencyThresholds {
    pub red_days: i64,
    pub yellow_days: i64,
}

impl Default for UrgencyThresholds {
    fn default() -> Self {
        UrgencyThresholds {
            red_days: 7,
            yellow_days: 21,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionPeriod {
    pub default_days: i64,
    pub per_type: BTreeMap<String, i64>,
}

impl Default for DecisionPeriod {
    fn default() -> Self {
        DecisionPeriod {
            default_days: 56,
            per_type: BTreeMap::new(),
        }
    }
}

impl DecisionPeriod {
    pub fn days_for(&self, case_type: &str) -> i64 {
        self.per_type
            .get(case_type)
            .copied()
            .unwrap_or(self.default_days)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ServiceConfig {
    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<ServiceConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: ServiceConfig = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        if let Some(spec) = &cfg.spec_path {
            if spec.is_relative() {
                cfg.spec_path = Some(base.join(spec));
            }
        }
        cfg.validate().map_err(|message| ConfigError::Invalid {
            path: path.display().to_string(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let u = self.urgency;
        if u.red_days < 0 || u.red_days > u.yellow_days {
            return Err(format!(
                "urgency thresholds must satisfy 0 <= red ({}) <= yellow ({})",
                u.red_days, u.yellow_days
            ));
        }
        if self.decision_period.default_days < 0
            || self.decision_period.per_type.values().any(|d| *d < 0)
        {
            return Err("decision periods must be non-negative".into());
        }
        if self.max_tree_depth == 0 {
            return Err("max_tree_depth must be at least 1".into());
        }
        if self.snapshot_every == 0 {
            return Err("snapshot_every must be at least 1".into());
        }
        Ok(())
    }
}
