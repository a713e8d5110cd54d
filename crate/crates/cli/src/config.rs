//! Run configuration: one TOML file with sections, plus `--set key=value`
//! overrides applied before deserialization.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use effortcast_core::baselines::Hyperparams;
use effortcast_core::llmclient::ProviderConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Schema TOML; the built-in ISBSG feature set is used when absent.
    pub schema: Option<PathBuf>,
    pub missing_sentinels: Vec<String>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            schema: None,
            missing_sentinels: vec!["".into(), "NA".into(), "N/A".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    /// Completeness tier split separately between train and test.
    pub pinned_max_missing: Option<usize>,
    pub pinned_train_frac: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 7,
            pinned_max_missing: None,
            pinned_train_frac: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StratifySection {
    pub max_missing: usize,
}

impl Default for StratifySection {
    fn default() -> Self {
        StratifySection { max_missing: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateSection {
    pub top_k: usize,
}

impl Default for CorrelateSection {
    fn default() -> Self {
        CorrelateSection { top_k: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateSection {
    pub preamble: Option<String>,
    pub separator: Option<String>,
    pub completion_suffix: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    MockOracle,
    MockConstant,
    MockScripted,
    Http,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mock-oracle" => Ok(ProviderKind::MockOracle),
            "mock-constant" => Ok(ProviderKind::MockConstant),
            "mock-scripted" => Ok(ProviderKind::MockScripted),
            "http" => Ok(ProviderKind::Http),
            other => Err(format!(
                "unknown provider `{other}` (expected mock-oracle, mock-constant, mock-scripted or http)"
            )),
        }
    }
}

/// Unknown keys are still rejected: they fall through to the flattened
/// client settings, which deny them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    /// Answer given by `mock-constant`.
    pub constant_hours: f64,
    /// JSON object mapping record id to raw completion text, for `mock-scripted`.
    pub script: Option<PathBuf>,
    pub poll_interval_ms: u64,
    pub max_polls: usize,
    #[serde(flatten)]
    pub client: ProviderConfig,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            kind: ProviderKind::MockOracle,
            constant_hours: 1000.0,
            script: None,
            poll_interval_ms: 10_000,
            max_polls: 360,
            client: ProviderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub estimators: Vec<String>,
    /// One split and fit per seed; metrics are averaged across seeds.
    pub seeds: Vec<u64>,
    pub outlier_k: f64,
    pub outlier_repeat: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            estimators: vec!["knn".into(), "linreg".into(), "svm".into()],
            seeds: vec![7],
            outlier_k: 1.5,
            outlier_repeat: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetSection,
    pub template: TemplateSection,
    pub correlate: CorrelateSection,
    pub stratify: StratifySection,
    pub split: SplitSection,
    pub provider: ProviderSection,
    pub hyperparameters: Hyperparams,
    pub evaluate: EvaluateSection,
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), UsageError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| UsageError(format!("--set {assignment}: expected section.key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(UsageError(format!("--set {assignment}: empty key segment")));
    }
    let mut at = table;
    for seg in &path[..path.len() - 1] {
        let entry = at
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        at = entry
            .as_table_mut()
            .ok_or_else(|| UsageError(format!("--set {assignment}: `{seg}` is not a section")))?;
    }
    at.insert(path[path.len() - 1].to_string(), parse_override_value(value.trim()));
    Ok(())
}

pub struct Loaded {
    pub config: Config,
    /// SHA-256 of the effective configuration after overrides.
    pub digest: String,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Loaded> {
    let (mut table, base_dir) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let t: toml::Table =
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            (t, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (toml::Table::new(), PathBuf::new()),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: Config = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| UsageError(format!("invalid configuration: {e}")))?;
    let canonical = toml::to_string(&config).context("serializing effective config")?;
    let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(Loaded {
        config,
        digest,
        base_dir,
    })
}

impl Loaded {
    /// Paths inside the config file are relative to the file itself.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
