//! Imputation, standardization and one-hot encoding, fitted on training data.

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::dataset::{Dataset, FeatureKind, FeatureValue, ProjectRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub feature: String,
    pub mean: f64,
    pub std: f64,
    pub impute_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub feature: String,
    /// Sorted; one output column per level.
    pub levels: Vec<String>,
    pub impute_level: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    pub numeric: Vec<NumericColumn>,
    pub categorical: Vec<CategoricalColumn>,
    /// Features with no usable signal in training (zero variance or never
    /// observed).
    pub dropped: Vec<String>,
}

impl PreprocessState {
    pub fn width(&self) -> usize {
        self.numeric.len() + self.categorical.iter().map(|c| c.levels.len()).sum::<usize>()
    }

    /// Encodes one record. Missing numerics take the training mean (so encode
    /// to 0), missing categoricals take the training mode, and levels never
    /// seen in training encode as all zeros.
    pub fn transform(&self, record: &ProjectRecord) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for c in &self.numeric {
            let x = record.feature(&c.feature).as_f64().unwrap_or(c.impute_value);
            out.push((x - c.mean) / c.std);
        }
        for c in &self.categorical {
            let level = match record.feature(&c.feature) {
                FeatureValue::Categorical(s) => s.as_str(),
                FeatureValue::Numeric(n) => n.text(),
                FeatureValue::Missing => c.impute_level.as_str(),
            };
            out.extend(c.levels.iter().map(|l| (l == level) as u8 as f64));
        }
        out
    }

    pub fn transform_all(&self, ds: &Dataset) -> Vec<Vec<f64>> {
        ds.records().iter().map(|r| self.transform(r)).collect()
    }
}

pub fn fit_preprocess(train: &Dataset) -> Result<PreprocessState, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    let n = train.len() as f64;
    let mut state = PreprocessState {
        numeric: Vec::new(),
        categorical: Vec::new(),
        dropped: Vec::new(),
    };
    for spec in train.schema().features() {
        let values = train.records().iter().map(|r| r.feature(&spec.name));
        match spec.kind {
            FeatureKind::Numeric => {
                let observed: Vec<f64> = values.filter_map(FeatureValue::as_f64).collect();
                if observed.is_empty() {
                    state.dropped.push(spec.name.clone());
                    continue;
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                // Imputed cells sit at the mean and add nothing to the sum of
                // squares, so this is the std of the imputed column.
                let ss: f64 = observed.iter().map(|x| (x - mean).powi(2)).sum();
                let std = (ss / n).sqrt();
                if !(std > 0.0) {
                    log::warn!("dropping zero-variance feature `{}`", spec.name);
                    state.dropped.push(spec.name.clone());
                    continue;
                }
                state.numeric.push(NumericColumn {
                    feature: spec.name.clone(),
                    mean,
                    std,
                    impute_value: mean,
                });
            }
            FeatureKind::Categorical => {
                let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
                for v in values {
                    let level = match v {
                        FeatureValue::Categorical(s) => s.clone(),
                        FeatureValue::Numeric(x) => x.text().to_string(),
                        FeatureValue::Missing => continue,
                    };
                    *counts.entry(level).or_default() += 1;
                }
                // Mode, ties to the first level in sorted order.
                let Some(mode) = counts
                    .iter()
                    .fold(None::<(&String, usize)>, |best, (l, &c)| match best {
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((l, c)),
                    })
                    .map(|(l, _)| l.clone())
                else {
                    state.dropped.push(spec.name.clone());
                    continue;
                };
                state.categorical.push(CategoricalColumn {
                    feature: spec.name.clone(),
                    levels: counts.into_keys().collect(),
                    impute_level: mode,
                });
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSpec, Provenance, Schema};

    fn fixture() -> Dataset {
        let schema = Schema::new(vec![
            FeatureSpec::new("size", FeatureKind::Numeric),
            FeatureSpec::new("lang", FeatureKind::Categorical),
            FeatureSpec::new("flat", FeatureKind::Numeric),
        ])
        .unwrap();
        let rows = [
            (Some(1.0), Some("C")),
            (Some(2.0), Some("Java")),
            (None, Some("C")),
            (Some(6.0), None),
            (Some(3.0), Some("Go")),
        ];
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, (s, l))| {
                let mut r = ProjectRecord::new(i.to_string(), 10.0 + i as f64)
                    .with("flat", FeatureValue::numeric(5.0));
                if let Some(s) = s {
                    r = r.with("size", FeatureValue::numeric(*s));
                }
                if let Some(l) = l {
                    r = r.with("lang", FeatureValue::categorical(l));
                }
                r
            })
            .collect();
        Dataset::new(schema, recs, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn standardized_training_columns() {
        let ds = fixture();
        let st = fit_preprocess(&ds).unwrap();
        assert_eq!(st.dropped, vec!["flat"]);
        let rows = st.transform_all(&ds);
        let col: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_hot_rows_sum_to_one() {
        let ds = fixture();
        let st = fit_preprocess(&ds).unwrap();
        assert_eq!(st.categorical[0].levels, vec!["C", "Go", "Java"]);
        assert_eq!(st.categorical[0].impute_level, "C");
        for row in st.transform_all(&ds) {
            assert_eq!(row[1..].iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn mean_record_encodes_to_zero_and_unseen_level_to_zeros() {
        let ds = fixture();
        let st = fit_preprocess(&ds).unwrap();
        let mean = st.numeric[0].mean;
        let r = ProjectRecord::new("q", 1.0)
            .with("size", FeatureValue::numeric(mean))
            .with("lang", FeatureValue::categorical("Rust"));
        assert_eq!(st.transform(&r), vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_training_set() {
        let ds = fixture().subset(&[]);
        assert!(matches!(fit_preprocess(&ds), Err(BaselineError::EmptyTrainingSet)));
    }
}
