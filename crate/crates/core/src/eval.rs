//! Error metrics, outlier filtering for scatter output, per-estimator reports
//! and the comparison table.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::reference::{ReferenceTable, REFERENCE_LABEL};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction set is empty")]
    EmptyPredictionSet,
    #[error("need at least {needed} points for quartiles, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("prediction for unknown record `{0}`")]
    UnknownRecord(String),
    #[error("duplicate prediction for record `{0}`")]
    DuplicatePrediction(String),
    #[error("non-finite prediction for record `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub id: String,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub pairs: Vec<PredictionPair>,
    pub excluded: Vec<Exclusion>,
}

impl PredictionSet {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64, f64)>,
        S: Into<String>,
    {
        PredictionSet {
            pairs: pairs
                .into_iter()
                .map(|(id, actual, predicted)| PredictionPair {
                    id: id.into(),
                    actual,
                    predicted,
                })
                .collect(),
            excluded: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Mean absolute error, in the units of the targets.
pub fn mae(set: &PredictionSet) -> Result<f64, EvalError> {
    if set.is_empty() {
        return Err(EvalError::EmptyPredictionSet);
    }
    let total: f64 = set.pairs.iter().map(|p| (p.actual - p.predicted).abs()).sum();
    Ok(total / set.len() as f64)
}

/// Root mean squared error.
pub fn rmse(set: &PredictionSet) -> Result<f64, EvalError> {
    if set.is_empty() {
        return Err(EvalError::EmptyPredictionSet);
    }
    let total: f64 = set
        .pairs
        .iter()
        .map(|p| {
            let e = p.actual - p.predicted;
            e * e
        })
        .sum();
    Ok((total / set.len() as f64).sqrt())
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OutlierRule {
    /// Drops pairs whose actual value falls outside
    /// `[Q1 - k*IQR, Q3 + k*IQR]` of the actuals. With `repeat`, the fence is
    /// recomputed on the survivors until nothing more is dropped (or fewer
    /// than four points remain), which makes the rule idempotent.
    IqrFence { k: f64, repeat: bool },
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::IqrFence { k: 1.5, repeat: true }
    }
}

impl OutlierRule {
    pub fn describe(&self) -> String {
        match self {
            OutlierRule::IqrFence { k, repeat } => format!(
                "actual outside [Q1-{k}*IQR, Q3+{k}*IQR]{}",
                if *repeat { ", repeated to a fixed point" } else { "" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierOutcome {
    pub kept: PredictionSet,
    pub dropped: Vec<String>,
    pub rule: OutlierRule,
}

const MIN_QUARTILE_POINTS: usize = 4;

pub fn remove_outliers(set: &PredictionSet, rule: OutlierRule) -> Result<OutlierOutcome, EvalError> {
    if set.len() < MIN_QUARTILE_POINTS {
        return Err(EvalError::TooFewPoints {
            needed: MIN_QUARTILE_POINTS,
            got: set.len(),
        });
    }
    let OutlierRule::IqrFence { k, repeat } = rule;
    let mut kept = set.pairs.clone();
    let mut dropped = Vec::new();
    loop {
        let mut actuals: Vec<f64> = kept.iter().map(|p| p.actual).collect();
        actuals.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&actuals, 0.25);
        let q3 = quantile_sorted(&actuals, 0.75);
        let iqr = q3 - q1;
        let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
        let before = kept.len();
        kept.retain(|p| {
            let inside = p.actual >= lo && p.actual <= hi;
            if !inside {
                dropped.push(p.id.clone());
            }
            inside
        });
        if !repeat || kept.len() == before || kept.len() < MIN_QUARTILE_POINTS {
            break;
        }
    }
    Ok(OutlierOutcome {
        kept: PredictionSet {
            pairs: kept,
            excluded: set.excluded.clone(),
        },
        dropped,
        rule,
    })
}

/// One estimator's output on a test set: a prediction per record, or a
/// reason the record could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub estimator: String,
    pub predictions: Vec<(String, Result<f64, String>)>,
    pub seeds: Vec<u64>,
    /// Free-form hyperparameter echo.
    pub hyperparameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub estimator: String,
    pub dataset: String,
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
    pub seeds: Vec<u64>,
    pub hyperparameters: serde_json::Value,
    pub excluded: usize,
    /// Published numbers for display only; never compared against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceCells>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCells {
    pub label: String,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
}

/// Joins `output` with the test targets by record id. Unscorable records are
/// counted as exclusions and never imputed.
pub fn prediction_set(output: &EstimatorOutput, test: &Dataset) -> Result<PredictionSet, EvalError> {
    let actual: HashMap<&str, f64> = test.records().iter().map(|r| (r.id.as_str(), r.target_hours)).collect();
    let mut seen = HashSet::new();
    let mut set = PredictionSet::default();
    for (id, pred) in &output.predictions {
        let &a = actual.get(id.as_str()).ok_or_else(|| EvalError::UnknownRecord(id.clone()))?;
        if !seen.insert(id.as_str()) {
            return Err(EvalError::DuplicatePrediction(id.clone()));
        }
        match pred {
            Ok(p) if p.is_finite() => set.pairs.push(PredictionPair {
                id: id.clone(),
                actual: a,
                predicted: *p,
            }),
            Ok(_) => return Err(EvalError::NonFinite(id.clone())),
            Err(reason) => set.excluded.push(Exclusion {
                id: id.clone(),
                reason: reason.clone(),
            }),
        }
    }
    if !set.excluded.is_empty() {
        log::warn!(
            "{}: excluded {} unscorable predictions from metrics",
            output.estimator,
            set.excluded.len()
        );
    }
    Ok(set)
}

pub fn evaluate(output: &EstimatorOutput, test: &Dataset) -> Result<EvaluationReport, EvalError> {
    let set = prediction_set(output, test)?;
    report_for(output, &test.provenance().to_string(), &set)
}

pub fn report_for(
    output: &EstimatorOutput,
    dataset: &str,
    set: &PredictionSet,
) -> Result<EvaluationReport, EvalError> {
    Ok(EvaluationReport {
        estimator: output.estimator.clone(),
        dataset: dataset.to_string(),
        n: set.len(),
        mae: mae(set)?,
        rmse: rmse(set)?,
        seeds: output.seeds.clone(),
        hyperparameters: output.hyperparameters.clone(),
        excluded: set.excluded.len(),
        reference: None,
    })
}

/// Attaches published reference cells to each report where available.
pub fn attach_references(reports: &mut [EvaluationReport], table: &ReferenceTable) {
    for r in reports {
        let rmse = table.rmse(&r.estimator, &r.dataset);
        let mae = table.mae(&r.estimator, &r.dataset);
        if rmse.is_some() || mae.is_some() {
            r.reference = Some(ReferenceCells {
                label: REFERENCE_LABEL.to_string(),
                rmse,
                mae,
            });
        }
    }
}

pub const METRICS_CSV_HEADER: &str = "estimator,dataset,n,mae,rmse,seed,excluded";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_csv(reports: &[EvaluationReport]) -> String {
    let mut out = format!("{METRICS_CSV_HEADER}\n");
    for r in reports {
        let seeds = r.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            csv_field(&r.estimator),
            csv_field(&r.dataset),
            r.n,
            r.mae,
            r.rmse,
            seeds,
            r.excluded
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Rmse,
}

impl Metric {
    fn of(self, r: &EvaluationReport) -> f64 {
        match self {
            Metric::Mae => r.mae,
            Metric::Rmse => r.rmse,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Metric::Mae => "MAE",
            Metric::Rmse => "RMSE",
        }
    }
}

/// Rows are estimators, columns are datasets, cells are one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub metric: Metric,
    pub datasets: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn compare(reports: &[EvaluationReport], metric: Metric) -> ComparisonTable {
    let mut datasets: Vec<String> = Vec::new();
    let mut estimators: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for r in reports {
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
        if !estimators.contains(&r.estimator) {
            estimators.push(r.estimator.clone());
        }
        cells.insert((r.estimator.clone(), r.dataset.clone()), metric.of(r));
    }
    let rows = estimators
        .into_iter()
        .map(|e| {
            let row = datasets.iter().map(|d| cells.get(&(e.clone(), d.clone())).copied()).collect();
            (e, row)
        })
        .collect();
    ComparisonTable {
        metric,
        datasets,
        rows,
    }
}

impl ComparisonTable {
    /// Markdown table. When `reference` is given, each cell also shows the
    /// published value for that estimator and dataset, if one exists.
    pub fn to_markdown(&self, reference: Option<&ReferenceTable>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Method | {} |", self.datasets.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(self.datasets.len()));
        for (est, row) in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&self.datasets)
                .map(|(v, d)| {
                    let local = v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
                    let published = reference.and_then(|t| match self.metric {
                        Metric::Rmse => t.rmse(est, d),
                        Metric::Mae => t.mae(est, d),
                    });
                    match published {
                        Some(p) => format!("{local} (ref {p:.2})"),
                        None => local,
                    }
                })
                .collect();
            let _ = writeln!(out, "| {est} | {} |", cells.join(" | "));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Metric: {} (hours).", self.metric.name());
        if reference.is_some() {
            let _ = writeln!(out, "\"ref\" values: {REFERENCE_LABEL}.");
        }
        out
    }
}

/// `id,actual,predicted,kept_after_outlier_rule` rows for external plotting.
pub fn scatter_csv(set: &PredictionSet, outcome: Option<&OutlierOutcome>) -> String {
    let dropped: HashSet<&str> = outcome
        .map(|o| o.dropped.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let mut out = String::from("id,actual,predicted,kept_after_outlier_rule\n");
    for p in &set.pairs {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&p.id),
            p.actual,
            p.predicted,
            !dropped.contains(p.id.as_str())
        );
    }
    out
}
