//! Feature-versus-cost correlation ranking.
//!
//! Numeric features are correlated directly with the target. A categorical
//! feature is scored by its strongest one-hot level. Pairs where the feature
//! is missing are dropped (pairwise deletion).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, FeatureKind, FeatureValue};

#[derive(Debug, Error, PartialEq)]
pub enum CorrelateError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two pairs, got {0}")]
    TooFewPairs(usize),
    #[error("no feature has at least two complete pairs with the target")]
    NoNumericPairs,
}

/// Pearson r, or `Undefined` when either input has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Defined(r) => Some(r),
            Correlation::Undefined => None,
        }
    }

    pub fn abs(self) -> Option<f64> {
        self.value().map(f64::abs)
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation, CorrelateError> {
    if xs.len() != ys.len() {
        return Err(CorrelateError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(CorrelateError::TooFewPairs(n));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation::Undefined);
    }
    Ok(Correlation::Defined((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEntry {
    pub feature: String,
    pub r: Correlation,
    pub n_pairs: usize,
    /// For categorical features, the one-hot level that produced `r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub target_name: String,
    pub method: &'static str,
    pub entries: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    /// `feature,r,n_pairs` rows; undefined correlations print as `undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,r,n_pairs\n");
        for e in &self.entries {
            let r = e.r.value().map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"));
            let name = if e.feature.contains([',', '"']) {
                format!("\"{}\"", e.feature.replace('"', "\"\""))
            } else {
                e.feature.clone()
            };
            let _ = writeln!(out, "{name},{r},{}", e.n_pairs);
        }
        out
    }
}

fn rank_order(a: &CorrelationEntry, b: &CorrelationEntry) -> Ordering {
    match (a.r.abs(), b.r.abs()) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.feature.cmp(&b.feature))
}

fn score_feature(ds: &Dataset, name: &str, kind: FeatureKind) -> CorrelationEntry {
    let pairs: Vec<(&FeatureValue, f64)> = ds
        .records()
        .iter()
        .map(|r| (r.feature(name), r.target_hours))
        .filter(|(v, _)| !v.is_missing())
        .collect();
    let n_pairs = pairs.len();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let entry = |r, level| CorrelationEntry {
        feature: name.to_string(),
        r,
        n_pairs,
        level,
    };
    if n_pairs < 2 {
        return entry(Correlation::Undefined, None);
    }
    match kind {
        FeatureKind::Numeric => {
            let xs: Vec<f64> = pairs.iter().filter_map(|p| p.0.as_f64()).collect();
            let r = pearson(&xs, &ys).unwrap_or(Correlation::Undefined);
            entry(r, None)
        }
        FeatureKind::Categorical => {
            let levels: BTreeSet<&str> = pairs
                .iter()
                .filter_map(|p| match p.0 {
                    FeatureValue::Categorical(s) => Some(s.as_str()),
                    _ => None,
                })
                .collect();
            let mut best: Option<(f64, &str)> = None;
            for level in levels {
                let xs: Vec<f64> = pairs
                    .iter()
                    .map(|p| matches!(p.0, FeatureValue::Categorical(s) if s == level) as u8 as f64)
                    .collect();
                if let Ok(Correlation::Defined(r)) = pearson(&xs, &ys) {
                    // Levels iterate in ascending order, so ties keep the first.
                    if best.is_none_or(|(b, _)| r.abs() > b.abs()) {
                        best = Some((r, level));
                    }
                }
            }
            match best {
                Some((r, level)) => entry(Correlation::Defined(r), Some(level.to_string())),
                None => entry(Correlation::Undefined, None),
            }
        }
    }
}

/// Scores every schema feature against the target and keeps the top `k` by
/// |r|, ties broken by name. Undefined correlations sort last.
pub fn rank_features(
    ds: &Dataset,
    target_name: &str,
    k: usize,
) -> Result<CorrelationReport, CorrelateError> {
    let mut entries: Vec<CorrelationEntry> = ds
        .schema()
        .features()
        .iter()
        .map(|f| score_feature(ds, &f.name, f.kind))
        .collect();
    if entries.iter().all(|e| e.n_pairs < 2) {
        return Err(CorrelateError::NoNumericPairs);
    }
    entries.sort_by(rank_order);
    entries.truncate(k);
    Ok(CorrelationReport {
        target_name: target_name.to_string(),
        method: "pearson",
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSpec, ProjectRecord, Provenance, Schema};

    #[test]
    fn perfect_and_anti_correlation() {
        assert_eq!(pearson(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), Correlation::Defined(1.0));
        assert_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), Correlation::Defined(-1.0));
    }

    #[test]
    fn constant_input_is_undefined() {
        assert_eq!(pearson(&[1., 1., 1.], &[1., 2., 3.]).unwrap(), Correlation::Undefined);
        assert_eq!(pearson(&[1., 2.], &[5., 5.]).unwrap(), Correlation::Undefined);
    }

    #[test]
    fn bad_lengths() {
        assert_eq!(pearson(&[1.], &[1.]), Err(CorrelateError::TooFewPairs(1)));
        assert_eq!(pearson(&[1., 2.], &[1.]), Err(CorrelateError::LengthMismatch(2, 1)));
    }

    #[test]
    fn categorical_uses_strongest_level() {
        let schema = Schema::new(vec![FeatureSpec::new("lang", FeatureKind::Categorical)]).unwrap();
        let recs = [("A", 10.0), ("A", 11.0), ("B", 1.0), ("C", 2.0), ("B", 1.5)]
            .iter()
            .enumerate()
            .map(|(i, (l, t))| {
                ProjectRecord::new(i.to_string(), *t).with("lang", FeatureValue::categorical(l))
            })
            .collect();
        let ds = Dataset::new(schema, recs, Provenance::Synthetic).unwrap();
        let report = rank_features(&ds, "effort", 5).unwrap();
        assert_eq!(report.entries[0].level.as_deref(), Some("A"));
        assert!(report.entries[0].r.value().unwrap() > 0.9);
    }

    #[test]
    fn all_missing_features_error() {
        let schema = Schema::new(vec![FeatureSpec::new("x", FeatureKind::Numeric)]).unwrap();
        let ds = Dataset::new(
            schema,
            vec![ProjectRecord::new("a", 1.0), ProjectRecord::new("b", 2.0)],
            Provenance::Synthetic,
        )
        .unwrap();
        assert_eq!(rank_features(&ds, "effort", 3), Err(CorrelateError::NoNumericPairs));
    }
}
