//! Dataset inputs: a CSV plus schema file, or a dataset JSON written by an
//! earlier command.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use effortcast_core::dataset::{load_csv, Dataset, LoadOptions, Provenance, Schema};
use effortcast_core::promptgen::PromptTemplate;
use serde::Deserialize;

use crate::config;

/// On-disk schema description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    pub target_column: String,
    pub id_column: Option<String>,
    pub provenance: Option<Provenance>,
    pub missing_sentinels: Option<Vec<String>>,
    pub features: Schema,
}

impl SchemaFile {
    pub fn builtin_isbsg() -> Self {
        SchemaFile {
            target_column: "normalized_work_effort".into(),
            id_column: Some("project_id".into()),
            provenance: Some(Provenance::Isbsg),
            missing_sentinels: None,
            features: Schema::isbsg(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading schema {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing schema {}", path.display()))
    }
}

pub struct Input {
    pub dataset: Dataset,
    pub target_name: String,
    pub schema_path: Option<PathBuf>,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn schema_file(cfg: &config::Loaded, flag: Option<&Path>) -> Result<(SchemaFile, Option<PathBuf>)> {
    let path = match flag {
        Some(p) => Some(p.to_path_buf()),
        None => cfg.config.dataset.schema.as_deref().map(|p| cfg.resolve(p)),
    };
    match path {
        Some(p) => Ok((SchemaFile::read(&p)?, Some(p))),
        None => Ok((SchemaFile::builtin_isbsg(), None)),
    }
}

pub fn load(cfg: &config::Loaded, path: &Path, schema_flag: Option<&Path>) -> Result<Input> {
    if is_json(path) {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading dataset {}", path.display()))?;
        let dataset = Dataset::from_json(&text)
            .with_context(|| format!("loading dataset {}", path.display()))?;
        return Ok(Input {
            dataset,
            target_name: "target_hours".into(),
            schema_path: None,
        });
    }
    let (sf, schema_path) = schema_file(cfg, schema_flag)?;
    let sentinels = sf
        .missing_sentinels
        .clone()
        .unwrap_or_else(|| cfg.config.dataset.missing_sentinels.clone());
    let mut opts = LoadOptions::new(&sf.target_column).sentinels(&sentinels);
    if let Some(id) = &sf.id_column {
        opts = opts.id_column(id);
    }
    if let Some(p) = &sf.provenance {
        opts = opts.provenance(p.clone());
    }
    let loaded = load_csv(path, &sf.features, &opts)
        .with_context(|| format!("loading {}", path.display()))?;
    let w = &loaded.warnings;
    if w.dropped() > 0 {
        log::warn!(
            "{}: skipped {} rows ({} blank target, {} non-positive target)",
            path.display(),
            w.dropped(),
            w.missing_target_rows.len(),
            w.nonpositive_target_rows.len()
        );
    }
    Ok(Input {
        dataset: loaded.dataset,
        target_name: sf.target_column,
        schema_path,
    })
}

/// Prompt template from the dataset's schema with config overrides applied.
pub fn template(cfg: &config::Loaded, schema: &Schema) -> Result<PromptTemplate> {
    let mut t = PromptTemplate::from_schema(schema).context("building prompt template")?;
    let s = &cfg.config.template;
    if let Some(p) = &s.preamble {
        t.preamble = p.clone();
    }
    if let Some(p) = &s.separator {
        t.separator = p.clone();
    }
    if let Some(p) = &s.completion_suffix {
        t.completion_suffix = p.clone();
    }
    Ok(t)
}
