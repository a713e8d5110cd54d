//! Prompt/completion rendering for fine-tune corpora, and parsing of numeric
//! estimates back out of model completions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{format_hours, Dataset, FeatureValue, ProjectRecord, Schema};

pub const DEFAULT_PREAMBLE: &str =
    "What is the estimated cost of hours of a Project with the description: ";
pub const DEFAULT_SEPARATOR: &str = ", ";
pub const COMPLETION_PREFIX: &str = "Estimated cost is: ";
pub const COMPLETION_SUFFIX: &str = " hours";

const SLOT: &str = "{}";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("record `{0}` has no usable target")]
    MissingTarget(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("no estimate found in completion `{0}`")]
    UnparsableCompletion(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub feature: String,
    /// Text with exactly one `{}` slot for the value.
    pub template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joiner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub preamble: String,
    pub clauses: Vec<Clause>,
    pub separator: String,
    /// Appended to each corpus completion (e.g. a stop sequence). Not part
    /// of [`render_completion`].
    #[serde(default)]
    pub completion_suffix: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::from_schema(&Schema::isbsg()).expect("built-in schema has clauses")
    }
}

impl PromptTemplate {
    /// Clauses come from each feature's `clause` in schema order; features
    /// without one are rendered as `<name> is {}`.
    pub fn from_schema(schema: &Schema) -> Result<Self, PromptError> {
        let clauses = schema
            .features()
            .iter()
            .map(|f| Clause {
                feature: f.name.clone(),
                template: f.clause.clone().unwrap_or_else(|| format!("{} is {{}}", f.name)),
                joiner: f.joiner.clone(),
            })
            .collect();
        let t = PromptTemplate {
            preamble: DEFAULT_PREAMBLE.to_string(),
            clauses,
            separator: DEFAULT_SEPARATOR.to_string(),
            completion_suffix: String::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        for c in &self.clauses {
            if c.template.matches(SLOT).count() != 1 {
                return Err(PromptError::InvalidTemplate(format!(
                    "clause for `{}` must contain exactly one `{SLOT}`",
                    c.feature
                )));
            }
        }
        Ok(())
    }
}

fn render_value(v: &FeatureValue) -> Option<String> {
    match v {
        FeatureValue::Numeric(n) => Some(n.text().to_string()),
        FeatureValue::Categorical(s) => Some(s.clone()),
        FeatureValue::Missing => None,
    }
}

/// Preamble followed by one clause per valued feature in template order.
/// Missing features contribute neither clause nor separator.
pub fn render_prompt(record: &ProjectRecord, template: &PromptTemplate) -> String {
    let mut out = template.preamble.clone();
    let mut pending_joiner: Option<&str> = None;
    for clause in &template.clauses {
        let Some(value) = render_value(record.feature(&clause.feature)) else {
            continue;
        };
        if let Some(j) = pending_joiner {
            out.push_str(j);
        }
        out.push_str(&clause.template.replacen(SLOT, &value, 1));
        pending_joiner = Some(clause.joiner.as_deref().unwrap_or(&template.separator));
    }
    out
}

pub fn render_completion(record: &ProjectRecord) -> Result<String, PromptError> {
    let t = record.target_hours;
    if !(t.is_finite() && t > 0.0) {
        return Err(PromptError::MissingTarget(record.id.clone()));
    }
    Ok(format!("{COMPLETION_PREFIX}{}{COMPLETION_SUFFIX}", format_hours(t)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt: String,
    pub completion: String,
    #[serde(skip)]
    pub source_id: String,
}

pub fn build_prompt_record(
    record: &ProjectRecord,
    template: &PromptTemplate,
) -> Result<PromptRecord, PromptError> {
    let mut completion = render_completion(record)?;
    completion.push_str(&template.completion_suffix);
    Ok(PromptRecord {
        prompt: render_prompt(record, template),
        completion,
        source_id: record.id.clone(),
    })
}

/// Renders the whole dataset as JSONL text, one `{"prompt", "completion"}`
/// object per record in dataset order.
pub fn corpus_jsonl(ds: &Dataset, template: &PromptTemplate) -> Result<String, PromptError> {
    let mut out = String::new();
    for r in ds.records() {
        let line = serde_json::to_string(&build_prompt_record(r, template)?)
            .expect("prompt record serializes");
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Writes the corpus to `path` and returns the number of lines written.
pub fn emit_corpus(
    ds: &Dataset,
    template: &PromptTemplate,
    path: impl AsRef<Path>,
) -> Result<usize, PromptError> {
    // Render first so a bad record leaves no partial file behind.
    let text = corpus_jsonl(ds, template)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(ds.len())
}

fn estimate_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)estimated\s+cost\s+is:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)")
            .expect("valid regex")
    })
}

/// Extracts the number following `Estimated cost is:` (case-insensitive).
pub fn parse_completion(text: &str) -> Result<f64, PromptError> {
    estimate_re()
        .captures(text)
        .and_then(|c| c[1].parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| PromptError::UnparsableCompletion(text.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_formats() {
        let r = |t| ProjectRecord::new("x", t);
        assert_eq!(render_completion(&r(1112.0)).unwrap(), "Estimated cost is: 1112.0 hours");
        assert_eq!(render_completion(&r(1.0)).unwrap(), "Estimated cost is: 1.0 hours");
        assert_eq!(render_completion(&r(2398.25)).unwrap(), "Estimated cost is: 2398.25 hours");
        assert!(matches!(render_completion(&r(f64::NAN)), Err(PromptError::MissingTarget(_))));
    }

    #[test]
    fn parse_tolerates_case_whitespace_and_suffix() {
        assert_eq!(parse_completion("Estimated cost is: 1112.0 hours").unwrap(), 1112.0);
        assert_eq!(parse_completion("estimated cost is:   42 ").unwrap(), 42.0);
        assert_eq!(parse_completion("ESTIMATED COST IS:7.5hours").unwrap(), 7.5);
        assert_eq!(parse_completion("Sure. Estimated cost is: 10 hours, maybe 20").unwrap(), 10.0);
        assert!(parse_completion("I cannot say").is_err());
        assert!(parse_completion("Estimated cost is: lots").is_err());
    }

    #[test]
    fn all_missing_record_renders_preamble() {
        let r = ProjectRecord::new("x", 1.0);
        assert_eq!(render_prompt(&r, &PromptTemplate::default()), DEFAULT_PREAMBLE);
    }

    #[test]
    fn single_feature_clause() {
        let r = ProjectRecord::new("x", 1.0)
            .with("primary_programming_language", FeatureValue::categorical("Java"));
        assert_eq!(
            render_prompt(&r, &PromptTemplate::default()),
            format!("{DEFAULT_PREAMBLE}Primary Programming Language is Java")
        );
    }

    #[test]
    fn joiner_only_between_rendered_clauses() {
        let t = PromptTemplate::default();
        let arch = ProjectRecord::new("x", 1.0)
            .with("architecture", FeatureValue::categorical("Stand alone"));
        assert_eq!(render_prompt(&arch, &t), format!("{DEFAULT_PREAMBLE}Architecture is Stand alone"));
        let both = arch.with("max_team_size", FeatureValue::numeric(4.0));
        assert_eq!(
            render_prompt(&both, &t),
            format!("{DEFAULT_PREAMBLE}Architecture is Stand alone with Max Team Size of 4.0")
        );
    }

    #[test]
    fn template_needs_one_slot() {
        let mut t = PromptTemplate::default();
        t.clauses[0].template = "Architecture".into();
        assert!(t.validate().is_err());
    }
}
