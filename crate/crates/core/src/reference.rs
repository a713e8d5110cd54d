//! Published reference numbers, shipped as static data for display next to
//! locally computed metrics.

use std::collections::BTreeMap;

use serde::Deserialize;

pub const REFERENCE_LABEL: &str = "published reference value, not locally reproduced";

const REFERENCE_TOML: &str = include_str!("../data/reference_results.toml");

/// metric -> estimator -> dataset -> value
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ReferenceTable {
    #[serde(default)]
    rmse: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    mae: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ReferenceTable {
    pub fn bundled() -> Self {
        toml::from_str(REFERENCE_TOML).expect("bundled reference table parses")
    }

    pub fn rmse(&self, estimator: &str, dataset: &str) -> Option<f64> {
        lookup(&self.rmse, estimator, dataset)
    }

    pub fn mae(&self, estimator: &str, dataset: &str) -> Option<f64> {
        lookup(&self.mae, estimator, dataset)
    }

    pub fn rmse_entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        flatten(&self.rmse)
    }

    pub fn mae_entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        flatten(&self.mae)
    }
}

fn lookup(m: &BTreeMap<String, BTreeMap<String, f64>>, estimator: &str, dataset: &str) -> Option<f64> {
    let row = m.get(&estimator.to_ascii_lowercase())?;
    row.iter()
        .find(|(d, _)| d.eq_ignore_ascii_case(dataset))
        .map(|(_, v)| *v)
}

fn flatten(
    m: &BTreeMap<String, BTreeMap<String, f64>>,
) -> impl Iterator<Item = (&str, &str, f64)> {
    m.iter()
        .flat_map(|(e, row)| row.iter().map(move |(d, v)| (e.as_str(), d.as_str(), *v)))
}
