//! Software effort estimation from tabular project records: dataset loading
//! and splitting, feature correlation, prompt-corpus generation for
//! completion-style fine-tuning, a provider-agnostic LLM client, classical
//! regression baselines and evaluation metrics.

pub mod baselines;
pub mod correlate;
pub mod dataset;
pub mod eval;
pub mod llmclient;
pub mod promptgen;
pub mod reference;

pub use baselines::{fit, BaselineError, EstimatorKind, Hyperparams, TrainedModel};
pub use correlate::{pearson, rank_features, Correlation, CorrelationEntry, CorrelationReport};
pub use dataset::{
    load_csv, split, stratify_by_completeness, CompletenessTier, Dataset, DatasetError, FeatureKind,
    FeatureSpec, FeatureValue, LoadOptions, Number, PinnedTier, ProjectRecord, Provenance, Schema,
    Split, SplitSpec,
};
pub use eval::{
    evaluate, mae, remove_outliers, rmse, EstimatorOutput, EvalError, EvaluationReport, OutlierRule,
    PredictionPair, PredictionSet,
};
pub use llmclient::{Estimate, FineTuneJob, JobStatus, LlmClient, LlmError, Provider, ProviderConfig};
pub use promptgen::{emit_corpus, parse_completion, render_prompt, PromptRecord, PromptTemplate};
pub use reference::ReferenceTable;
