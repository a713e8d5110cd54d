//! Project datasets: CSV ingestion with explicit missing values, completeness
//! tiers, and seeded train/validation/test splitting.
//!
//! A [`Dataset`] is immutable once loaded. Every operation here is a pure
//! function of its inputs, so datasets can be shared freely across threads.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cell values treated as blank unless the caller overrides the list.
pub const DEFAULT_MISSING_SENTINELS: &[&str] = &["", "NA", "N/A"];

/// Slack used when flooring fractional split sizes, so that `0.29 * 100`
/// floors to 29 rather than 28.
const SPLIT_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv at line {line}: expected {expected} fields, found {found}")]
    MalformedCsv {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("column `{0}` not found in csv header")]
    MissingColumn(String),
    #[error("unparsable numeric value `{value}` at row {row}, column `{column}`")]
    UnparsableNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid completeness tier: max_missing {max_missing} exceeds {n_features} features")]
    InvalidTier {
        max_missing: usize,
        n_features: usize,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("cannot split an empty dataset")]
    EmptyDataset,
    #[error(
        "pinned tier of {tier_size} records does not fit the requested split \
         (needs {pinned_train} train / {pinned_test} test, split allows {train} / {test})"
    )]
    PinnedTierLargerThanSplit {
        tier_size: usize,
        pinned_train: usize,
        pinned_test: usize,
        train: usize,
        test: usize,
    },
    #[error("invalid target for record `{id}`: {value}")]
    InvalidTarget { id: String, value: f64 },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

/// A finite real that remembers how it was written, so `"0"` renders as `0`
/// and `"3.0"` as `3.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Number {
    value: f64,
    text: String,
}

impl Number {
    /// Wraps a computed value, rendering whole numbers with one decimal.
    pub fn new(value: f64) -> Option<Self> {
        value.is_finite().then(|| Number {
            value,
            text: format_hours(value),
        })
    }

    /// Parses a source literal, keeping its spelling for later rendering.
    pub fn parse(literal: &str) -> Option<Self> {
        let text = literal.trim();
        if text.is_empty() {
            return None;
        }
        // Rust's f64 parser accepts "inf" and "NaN"; neither is admitted.
        let value: f64 = text.parse().ok()?;
        value.is_finite().then(|| Number {
            value,
            text: text.to_string(),
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Number {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Number::parse(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("not a finite number: `{text}`")))
    }
}

/// Renders a real with the shortest round-tripping decimal form, keeping a
/// trailing `.0` on whole values (`1112.0`, `2398.25`).
pub fn format_hours(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e17 {
        format!("{value:.1}")
    } else {
        format!("{value}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureValue {
    Numeric(Number),
    Categorical(String),
    Missing,
}

impl FeatureValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureValue::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            FeatureValue::Numeric(n) => Some(n.value()),
            _ => None,
        }
    }

    pub fn categorical(text: &str) -> Self {
        let t = text.trim();
        if t.is_empty() {
            FeatureValue::Missing
        } else {
            FeatureValue::Categorical(t.to_string())
        }
    }

    pub fn numeric(value: f64) -> Self {
        Number::new(value).map_or(FeatureValue::Missing, FeatureValue::Numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// One selected feature: where it lives in the CSV and how it reads in a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// CSV header; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Prompt clause with a single `{}` value slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clause: Option<String>,
    /// Text placed between this clause and the next rendered one, when it
    /// differs from the template's separator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joiner: Option<String>,
}

impl FeatureSpec {
    pub fn new(name: &str, kind: FeatureKind) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind,
            column: None,
            clause: None,
            joiner: None,
        }
    }

    pub fn with_clause(mut self, clause: &str) -> Self {
        self.clause = Some(clause.to_string());
        self
    }

    pub fn with_joiner(mut self, joiner: &str) -> Self {
        self.joiner = Some(joiner.to_string());
        self
    }

    pub fn with_column(mut self, column: &str) -> Self {
        self.column = Some(column.to_string());
        self
    }

    pub fn column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }
}

/// An ordered feature list with unique names.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Schema {
    features: Vec<FeatureSpec>,
}

impl Schema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.trim().is_empty() {
                return Err(DatasetError::InvalidSchema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(DatasetError::InvalidSchema(format!(
                    "duplicate feature name `{}`",
                    f.name
                )));
            }
        }
        Ok(Schema { features })
    }

    /// The ten features selected for ISBSG prompts, in prompt order.
    pub fn isbsg() -> Self {
        use FeatureKind::*;
        let features = vec![
            FeatureSpec::new("architecture", Categorical)
                .with_clause("Architecture is {}")
                .with_joiner(" with "),
            FeatureSpec::new("devs_under_1yr", Numeric)
                .with_clause("{} Number of developers with under 1 year of experiance"),
            FeatureSpec::new("devs_1_to_3yr", Numeric)
                .with_clause("{} number of developers with 1 to 3 years of experiance"),
            FeatureSpec::new("devs_over_3yr", Numeric)
                .with_clause("{} Number of developers with over 3 years of experiance"),
            FeatureSpec::new("manager_experience_years", Numeric)
                .with_clause("Manager's years of experiance is {}"),
            FeatureSpec::new("application_group", Categorical).with_clause("{} Application Group"),
            FeatureSpec::new("application_type", Categorical).with_clause("{} Application Type"),
            FeatureSpec::new("primary_programming_language", Categorical)
                .with_clause("Primary Programming Language is {}"),
            FeatureSpec::new("max_team_size", Numeric).with_clause("Max Team Size of {}"),
            FeatureSpec::new("development_methodology", Categorical)
                .with_clause("Development Methodologies is {}"),
        ];
        Schema { features }
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let features = Vec::<FeatureSpec>::deserialize(d)?;
        Schema::new(features).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Isbsg,
    Desharnais,
    Cocomo,
    Synthetic,
    Other(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Isbsg => f.write_str("ISBSG"),
            Provenance::Desharnais => f.write_str("Desharnais"),
            Provenance::Cocomo => f.write_str("COCOMO"),
            Provenance::Synthetic => f.write_str("synthetic"),
            Provenance::Other(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    /// Absent keys are treated exactly like [`FeatureValue::Missing`].
    pub features: BTreeMap<String, FeatureValue>,
    pub target_hours: f64,
}

impl ProjectRecord {
    pub fn new(id: impl Into<String>, target_hours: f64) -> Self {
        ProjectRecord {
            id: id.into(),
            features: BTreeMap::new(),
            target_hours,
        }
    }

    pub fn with(mut self, name: &str, value: FeatureValue) -> Self {
        self.features.insert(name.to_string(), value);
        self
    }

    pub fn feature(&self, name: &str) -> &FeatureValue {
        self.features.get(name).unwrap_or(&FeatureValue::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    records: Vec<ProjectRecord>,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, checking id uniqueness, positive targets and that
    /// every feature key belongs to the schema.
    pub fn new(schema: Schema, records: Vec<ProjectRecord>, provenance: Provenance) -> Result<Self> {
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId(r.id.clone()));
            }
            if !(r.target_hours.is_finite() && r.target_hours > 0.0) {
                return Err(DatasetError::InvalidTarget {
                    id: r.id.clone(),
                    value: r.target_hours,
                });
            }
            if let Some(k) = r.features.keys().find(|k| !schema.contains(k)) {
                return Err(DatasetError::UnknownFeature(k.clone()));
            }
        }
        Ok(Dataset {
            schema,
            records,
            provenance,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.target_hours).collect()
    }

    /// Records at `indices`, in the order given. Indices must be in range.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Concatenates two datasets over the same schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != other.schema {
            return Err(DatasetError::Invalid("cannot concatenate datasets with different schemas".into()));
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Dataset::new(self.schema.clone(), records, self.provenance.clone())
    }

    pub fn from_json(text: &str) -> Result<Dataset> {
        let raw: Dataset =
            serde_json::from_str(text).map_err(|e| DatasetError::Invalid(e.to_string()))?;
        Dataset::new(raw.schema, raw.records, raw.provenance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target_column: String,
    /// Column holding record ids; rows are numbered `row-<n>` otherwise.
    pub id_column: Option<String>,
    pub missing_sentinels: Vec<String>,
    pub provenance: Provenance,
}

impl LoadOptions {
    pub fn new(target_column: &str) -> Self {
        LoadOptions {
            target_column: target_column.to_string(),
            id_column: None,
            missing_sentinels: DEFAULT_MISSING_SENTINELS.iter().map(|s| s.to_string()).collect(),
            provenance: Provenance::Other("unspecified".into()),
        }
    }

    pub fn id_column(mut self, column: &str) -> Self {
        self.id_column = Some(column.to_string());
        self
    }

    pub fn provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn sentinels<S: AsRef<str>>(mut self, sentinels: &[S]) -> Self {
        self.missing_sentinels = sentinels.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    fn is_missing(&self, cell: &str) -> bool {
        let t = cell.trim();
        t.is_empty() || self.missing_sentinels.iter().any(|s| s.trim() == t)
    }
}

/// Rows skipped during loading. Neither condition is fatal.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadWarnings {
    /// 1-based data row numbers whose target cell was blank.
    pub missing_target_rows: Vec<usize>,
    /// 1-based data row numbers whose target was zero or negative.
    pub nonpositive_target_rows: Vec<usize>,
}

impl LoadWarnings {
    pub fn dropped(&self) -> usize {
        self.missing_target_rows.len() + self.nonpositive_target_rows.len()
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub warnings: LoadWarnings,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, opts: &LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema, opts)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, schema: &Schema, opts: &LoadOptions) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    let index_of = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let target_idx = index_of(&opts.target_column)?;
    let id_idx = opts.id_column.as_deref().map(index_of).transpose()?;
    let feature_idx = schema
        .features()
        .iter()
        .map(|f| index_of(f.column()))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut warnings = LoadWarnings::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let row_no = i + 1;
        if row.len() != headers.len() {
            return Err(DatasetError::MalformedCsv {
                line: row.position().map_or(row_no as u64 + 1, |p| p.line()),
                expected: headers.len(),
                found: row.len(),
            });
        }
        let numeric = |idx: usize, column: &str| -> Result<Option<Number>> {
            let cell = &row[idx];
            if opts.is_missing(cell) {
                return Ok(None);
            }
            Number::parse(cell)
                .map(Some)
                .ok_or_else(|| DatasetError::UnparsableNumeric {
                    row: row_no,
                    column: column.to_string(),
                    value: cell.to_string(),
                })
        };

        let mut features = BTreeMap::new();
        for (spec, &idx) in schema.features().iter().zip(&feature_idx) {
            let value = match spec.kind {
                FeatureKind::Numeric => {
                    numeric(idx, spec.column())?.map_or(FeatureValue::Missing, FeatureValue::Numeric)
                }
                FeatureKind::Categorical if opts.is_missing(&row[idx]) => FeatureValue::Missing,
                FeatureKind::Categorical => FeatureValue::categorical(&row[idx]),
            };
            features.insert(spec.name.clone(), value);
        }

        let Some(target) = numeric(target_idx, &opts.target_column)? else {
            warnings.missing_target_rows.push(row_no);
            continue;
        };
        if target.value() <= 0.0 {
            warnings.nonpositive_target_rows.push(row_no);
            continue;
        }
        let id = match id_idx {
            Some(idx) if !row[idx].trim().is_empty() => row[idx].trim().to_string(),
            _ => format!("row-{row_no}"),
        };
        records.push(ProjectRecord {
            id,
            features,
            target_hours: target.value(),
        });
    }
    if warnings.dropped() > 0 {
        log::warn!(
            "dropped {} rows without a usable target ({} blank, {} non-positive)",
            warnings.dropped(),
            warnings.missing_target_rows.len(),
            warnings.nonpositive_target_rows.len()
        );
    }
    let dataset = Dataset::new(schema.clone(), records, opts.provenance.clone())?;
    Ok(Loaded { dataset, warnings })
}

/// Number of `selected` features that are missing (or absent) in `record`.
pub fn count_missing<S: AsRef<str>>(
    schema: &Schema,
    record: &ProjectRecord,
    selected: &[S],
) -> Result<usize> {
    let mut n = 0;
    for name in selected {
        let name = name.as_ref();
        if !schema.contains(name) {
            return Err(DatasetError::UnknownFeature(name.to_string()));
        }
        if record.feature(name).is_missing() {
            n += 1;
        }
    }
    Ok(n)
}

/// Maximum number of blank selected features a record may have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletenessTier {
    pub max_missing: usize,
}

impl CompletenessTier {
    pub fn new(max_missing: usize, schema: &Schema) -> Result<Self> {
        let tier = CompletenessTier { max_missing };
        tier.validate(schema)?;
        Ok(tier)
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.max_missing > schema.len() {
            return Err(DatasetError::InvalidTier {
                max_missing: self.max_missing,
                n_features: schema.len(),
            });
        }
        Ok(())
    }
}

fn tier_indices(ds: &Dataset, tier: CompletenessTier) -> Result<Vec<usize>> {
    tier.validate(ds.schema())?;
    let selected: Vec<&str> = ds.schema().names().collect();
    let mut out = Vec::new();
    for (i, r) in ds.records().iter().enumerate() {
        if count_missing(ds.schema(), r, &selected)? <= tier.max_missing {
            out.push(i);
        }
    }
    Ok(out)
}

/// Records with at most `tier.max_missing` blanks among the schema features,
/// in input order.
pub fn stratify_by_completeness(ds: &Dataset, tier: CompletenessTier) -> Result<Dataset> {
    Ok(ds.subset(&tier_indices(ds, tier)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedTier {
    pub tier: CompletenessTier,
    pub train_frac_within_tier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<PinnedTier>,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_frac,
            val_frac,
            test_frac,
            seed,
            pinned: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pinned(mut self, tier: CompletenessTier, train_frac_within_tier: f64) -> Result<Self> {
        self.pinned = Some(PinnedTier {
            tier,
            train_frac_within_tier,
        });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if ![self.train_frac, self.val_frac, self.test_frac].into_iter().all(unit) {
            return Err(DatasetError::InvalidSplit("fractions must lie in [0, 1]".into()));
        }
        let sum = self.train_frac + self.val_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        if let Some(p) = &self.pinned {
            if !unit(p.train_frac_within_tier) {
                return Err(DatasetError::InvalidSplit(
                    "pinned train fraction must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

fn floor_frac(n: usize, frac: f64) -> usize {
    ((n as f64) * frac + SPLIT_EPS).floor() as usize
}

/// Partitions `ds` into train/validation/test.
///
/// Train and validation sizes are floored, test takes the remainder. With a
/// pinned tier, the tier's records are split train/test first (none go to
/// validation) and the remaining records fill the global quotas. Each output
/// keeps the input's record order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let n = ds.len();
    let train_total = floor_frac(n, spec.train_frac);
    let val_total = floor_frac(n, spec.val_frac).min(n - train_total);
    let test_total = n - train_total - val_total;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut pinned, mut rest): (Vec<usize>, Vec<usize>) = match &spec.pinned {
        Some(p) => {
            let tier: HashSet<usize> = tier_indices(ds, p.tier)?.into_iter().collect();
            (0..n).partition(|i| tier.contains(i))
        }
        None => (Vec::new(), (0..n).collect()),
    };
    pinned.shuffle(&mut rng);
    rest.shuffle(&mut rng);

    let pinned_train = spec
        .pinned
        .map_or(0, |p| floor_frac(pinned.len(), p.train_frac_within_tier));
    let pinned_test = pinned.len() - pinned_train;
    if pinned_train > train_total || pinned_test > test_total {
        return Err(DatasetError::PinnedTierLargerThanSplit {
            tier_size: pinned.len(),
            pinned_train,
            pinned_test,
            train: train_total,
            test: test_total,
        });
    }
    let rest_train = train_total - pinned_train;
    let rest_val = val_total;

    let mut train: Vec<usize> = pinned[..pinned_train].to_vec();
    train.extend_from_slice(&rest[..rest_train]);
    let mut val: Vec<usize> = rest[rest_train..rest_train + rest_val].to_vec();
    let mut test: Vec<usize> = pinned[pinned_train..].to_vec();
    test.extend_from_slice(&rest[rest_train + rest_val..]);
    for part in [&mut train, &mut val, &mut test] {
        part.sort_unstable();
    }
    debug_assert_eq!(train.len() + val.len() + test.len(), n);

    Ok(Split {
        train: ds.subset(&train),
        val: ds.subset(&val),
        test: ds.subset(&test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_feature_schema() -> Schema {
        Schema::new(vec![
            FeatureSpec::new("size", FeatureKind::Numeric),
            FeatureSpec::new("lang", FeatureKind::Categorical),
        ])
        .unwrap()
    }

    fn load(text: &str) -> Result<Loaded> {
        read_csv(text.as_bytes(), &two_feature_schema(), &LoadOptions::new("effort"))
    }

    #[test]
    fn number_keeps_source_spelling() {
        assert_eq!(Number::parse("0").unwrap().text(), "0");
        assert_eq!(Number::parse(" 3.0 ").unwrap().text(), "3.0");
        assert!(Number::parse("NaN").is_none());
        assert!(Number::parse("inf").is_none());
        assert_eq!(Number::new(4.0).unwrap().text(), "4.0");
        assert_eq!(format_hours(2398.25), "2398.25");
        assert_eq!(format_hours(1112.0), "1112.0");
    }

    #[test]
    fn header_only_file_is_empty_dataset() {
        let loaded = load("size,lang,effort\n").unwrap();
        assert!(loaded.dataset.is_empty());
    }

    #[test]
    fn blank_and_sentinel_cells_are_missing() {
        let loaded = load("size,lang,effort\n1.5,,10\nNA,Java,20\n2,N/A,30\n").unwrap();
        let r = loaded.dataset.records();
        assert!(r[0].feature("lang").is_missing());
        assert!(r[1].feature("size").is_missing());
        assert!(r[2].feature("lang").is_missing());
        assert_eq!(r[1].feature("lang"), &FeatureValue::Categorical("Java".into()));
        assert_eq!(r[2].id, "row-3");
    }

    #[test]
    fn custom_sentinels_replace_defaults() {
        let opts = LoadOptions::new("effort").sentinels(&["?"]);
        let loaded = read_csv(
            "size,lang,effort\n?,NA,10\n".as_bytes(),
            &two_feature_schema(),
            &opts,
        )
        .unwrap();
        let r = &loaded.dataset.records()[0];
        assert!(r.feature("size").is_missing());
        assert_eq!(r.feature("lang"), &FeatureValue::Categorical("NA".into()));
    }

    #[test]
    fn arity_mismatch_is_malformed() {
        let err = load("size,lang,effort\n1,Java\n").unwrap_err();
        assert!(matches!(err, DatasetError::MalformedCsv { expected: 3, found: 2, .. }));
    }

    #[test]
    fn unparsable_numeric_cites_cell() {
        let err = load("size,lang,effort\n1,Java,10\nbig,C,20\n").unwrap_err();
        match err {
            DatasetError::UnparsableNumeric { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "size", "big"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_target_rows_are_dropped_and_counted() {
        let loaded = load("size,lang,effort\n1,Java,\n2,C,5\n3,C,0\n").unwrap();
        assert_eq!(loaded.dataset.len(), 1);
        assert_eq!(loaded.warnings.missing_target_rows, vec![1]);
        assert_eq!(loaded.warnings.nonpositive_target_rows, vec![3]);
    }

    #[test]
    fn missing_column_is_reported() {
        let err = load("size,effort\n1,2\n").unwrap_err();
        assert!(matches!(err, DatasetError::MissingColumn(c) if c == "lang"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let opts = LoadOptions::new("effort").id_column("id");
        let err = read_csv(
            "id,size,lang,effort\na,1,C,1\na,2,C,2\n".as_bytes(),
            &two_feature_schema(),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn count_missing_rejects_unknown_feature() {
        let schema = two_feature_schema();
        let r = ProjectRecord::new("x", 1.0);
        assert_eq!(count_missing(&schema, &r, &["size", "lang"]).unwrap(), 2);
        assert!(matches!(
            count_missing(&schema, &r, &["colour"]),
            Err(DatasetError::UnknownFeature(_))
        ));
    }

    #[test]
    fn tier_above_feature_count_is_invalid() {
        assert!(CompletenessTier::new(3, &two_feature_schema()).is_err());
        assert!(CompletenessTier::new(2, &two_feature_schema()).is_ok());
    }

    #[test]
    fn split_spec_validation() {
        assert!(SplitSpec::new(0.8, 0.1, 0.1, 0).is_ok());
        assert!(SplitSpec::new(0.8, 0.1, 0.2, 0).is_err());
        assert!(SplitSpec::new(1.1, -0.1, 0.0, 0).is_err());
    }

    #[test]
    fn split_of_empty_dataset_fails() {
        let ds = Dataset::new(two_feature_schema(), vec![], Provenance::Synthetic).unwrap();
        let spec = SplitSpec::new(0.8, 0.1, 0.1, 1).unwrap();
        assert!(matches!(split(&ds, &spec), Err(DatasetError::EmptyDataset)));
    }

    #[test]
    fn isbsg_schema_has_ten_unique_features() {
        let s = Schema::isbsg();
        assert_eq!(s.len(), 10);
        assert!(Schema::new(s.features().to_vec()).is_ok());
    }

    #[test]
    fn dataset_json_round_trip() {
        let loaded = load("size,lang,effort\n0,\"C, \"\"old\"\"\",10\n3.0,,2.5\n").unwrap();
        let back = Dataset::from_json(&loaded.dataset.to_json()).unwrap();
        assert_eq!(back, loaded.dataset);
        assert_eq!(back.records()[0].feature("size").as_f64(), Some(0.0));
    }
}
