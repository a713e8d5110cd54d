//! Provider-agnostic LLM client: fine-tune submission, job polling and
//! completion inference, with bounded retries and a cap on in-flight
//! requests.
//!
//! The API key never lives in configuration. [`ProviderConfig`] stores only
//! the name of the environment variable that holds it, and providers read the
//! variable when they make a call.

mod http;
mod mock;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::promptgen::parse_completion;

pub use http::HttpProvider;
pub use mock::{validate_corpus, ConstantMock, EchoOracleMock, MockJobs, ScriptedMock};

pub const DEFAULT_API_KEY_ENV: &str = "EFFORTCAST_API_KEY";

/// Failure reported by a single provider call.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("server error {status}: {message}")]
    Server { status: u16, message: String },
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
}

impl ProviderError {
    fn retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Network(_) | ProviderError::RateLimited { .. } | ProviderError::Server { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("provider rejected corpus: {0}")]
    ProviderRejectedCorpus(String),
    #[error("provider rejected request: {0}")]
    Rejected(String),
    #[error("network failure after {attempts} attempts: {message}")]
    NetworkFailure { attempts: u32, message: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_backoff_ms: 500,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`: `base * 2^(attempt - 1)`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(20);
        Duration::from_millis(self.base_backoff_ms.saturating_mul(factor))
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env_var: String,
    pub timeout_ms: u64,
    pub max_concurrent_requests: usize,
    pub retry: RetryPolicy,
    /// Decoding is deterministic by default.
    pub temperature: f64,
    pub max_tokens: u32,
    /// Passed through verbatim with fine-tune submissions.
    pub finetune_hyperparameters: serde_json::Map<String, serde_json::Value>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: "http://127.0.0.1:8080/v1".into(),
            model_name: "gpt-3.5-turbo".into(),
            api_key_env_var: DEFAULT_API_KEY_ENV.into(),
            timeout_ms: 30_000,
            max_concurrent_requests: 4,
            retry: RetryPolicy::default(),
            temperature: 0.0,
            max_tokens: 16,
            finetune_hyperparameters: Default::default(),
        }
    }
}

impl fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("api_key_env_var", &self.api_key_env_var)
            .field("max_concurrent_requests", &self.max_concurrent_requests)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_concurrent_requests == 0 {
            return Err(LlmError::Config("max_concurrent_requests must be >= 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(LlmError::Config("retry.max_attempts must be >= 1".into()));
        }
        if self.api_key_env_var.trim().is_empty() {
            return Err(LlmError::Config("api_key_env_var must name a variable".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Running,
    Succeeded,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Succeeded | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneJob {
    pub job_id: String,
    pub status: JobStatus,
    pub result_model: Option<String>,
    /// SHA-256 of the submitted corpus, hex encoded.
    pub submitted_corpus_digest: String,
}

impl FineTuneJob {
    /// Enforces that a result model is present exactly when the job succeeded.
    pub fn new(
        job_id: String,
        status: JobStatus,
        result_model: Option<String>,
        submitted_corpus_digest: String,
    ) -> Result<Self, ProviderError> {
        if (status == JobStatus::Succeeded) != result_model.is_some() {
            return Err(ProviderError::InvalidResponse(format!(
                "job `{job_id}` is {status:?} but result model is {result_model:?}"
            )));
        }
        Ok(FineTuneJob {
            job_id,
            status,
            result_model,
            submitted_corpus_digest,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineTuneRequest {
    pub base_model: String,
    pub corpus: String,
    pub corpus_digest: String,
    pub hyperparameters: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    /// Caller's record id, used by mocks to script answers.
    #[serde(skip)]
    pub source_id: String,
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn submit_finetune(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError>;
    fn job_status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError>;
    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub source_id: String,
    pub predicted_hours: Option<f64>,
    pub raw_completion: String,
    pub parse_ok: bool,
    /// Transport or provider failure for this item, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Estimate {
    fn from_completion(source_id: &str, raw: String) -> Self {
        match parse_completion(&raw) {
            Ok(h) => Estimate {
                source_id: source_id.to_string(),
                predicted_hours: Some(h),
                raw_completion: raw,
                parse_ok: true,
                error: None,
            },
            Err(_) => Estimate {
                source_id: source_id.to_string(),
                predicted_hours: None,
                raw_completion: raw,
                parse_ok: false,
                error: None,
            },
        }
    }

    fn failed(source_id: &str, err: &LlmError) -> Self {
        Estimate {
            source_id: source_id.to_string(),
            predicted_hours: None,
            raw_completion: String::new(),
            parse_ok: false,
            error: Some(err.to_string()),
        }
    }
}

/// Counting semaphore bounding concurrent provider calls.
#[derive(Debug)]
pub struct ConcurrencyGate {
    limit: usize,
    in_flight: Mutex<usize>,
    cv: Condvar,
    peak: AtomicUsize,
}

pub struct GatePermit<'a>(&'a ConcurrencyGate);

impl ConcurrencyGate {
    pub fn new(limit: usize) -> Self {
        ConcurrencyGate {
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            cv: Condvar::new(),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn acquire(&self) -> GatePermit<'_> {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.limit {
            n = self.cv.wait(n).expect("gate lock");
        }
        *n += 1;
        self.peak.fetch_max(*n, Ordering::SeqCst);
        GatePermit(self)
    }

    /// Highest number of simultaneous permits observed.
    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().expect("gate lock");
        *n -= 1;
        self.0.cv.notify_one();
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shareable client. Every request passes through the concurrency gate and
/// the retry policy.
pub struct LlmClient {
    provider: Arc<dyn Provider>,
    cfg: ProviderConfig,
    gate: ConcurrencyGate,
    attempts: AtomicUsize,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn Provider>, cfg: ProviderConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        Ok(LlmClient {
            gate: ConcurrencyGate::new(cfg.max_concurrent_requests),
            provider,
            cfg,
            attempts: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn gate(&self) -> &ConcurrencyGate {
        &self.gate
    }

    /// Provider calls made so far, retries included.
    pub fn attempts_made(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }

    fn with_retry<T>(
        &self,
        what: &str,
        mut call: impl FnMut() -> Result<T, ProviderError>,
    ) -> Result<T, ProviderError> {
        let policy = self.cfg.retry;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.attempts.fetch_add(1, Ordering::SeqCst);
            let result = {
                let _permit = self.gate.acquire();
                call()
            };
            match result {
                Err(e) if e.retryable() && attempt < policy.max_attempts => {
                    let mut delay = policy.backoff(attempt);
                    if let ProviderError::RateLimited { retry_after: Some(ra) } = &e {
                        delay = delay.max(*ra);
                    }
                    log::debug!(
                        "{} {what}: attempt {attempt} failed ({e}); retrying in {delay:?}",
                        self.provider.name()
                    );
                    std::thread::sleep(delay);
                }
                Err(e) => {
                    if e.retryable() {
                        log::warn!("{} {what}: giving up after {attempt} attempts", self.provider.name());
                    }
                    return Err(e);
                }
                Ok(v) => return Ok(v),
            }
        }
    }

    fn lift(&self, e: ProviderError) -> LlmError {
        let attempts = self.cfg.retry.max_attempts;
        match e {
            ProviderError::Auth(m) => LlmError::AuthFailure(m),
            ProviderError::Rejected(m) => LlmError::Rejected(m),
            ProviderError::Network(m) => LlmError::NetworkFailure { attempts, message: m },
            ProviderError::Server { status, message } => LlmError::NetworkFailure {
                attempts,
                message: format!("server error {status}: {message}"),
            },
            ProviderError::RateLimited { .. } => LlmError::RateLimited { attempts },
            ProviderError::UnknownJob(id) => LlmError::UnknownJob(id),
            ProviderError::InvalidResponse(m) => LlmError::InvalidResponse(m),
        }
    }

    /// Uploads a JSONL corpus and starts a fine-tune of the configured base model.
    pub fn submit_finetune(&self, corpus: impl AsRef<Path>) -> Result<FineTuneJob, LlmError> {
        let text = std::fs::read_to_string(corpus)?;
        let digest = sha256_hex(text.as_bytes());
        let req = FineTuneRequest {
            base_model: self.cfg.model_name.clone(),
            corpus: text,
            corpus_digest: digest.clone(),
            hyperparameters: self.cfg.finetune_hyperparameters.clone(),
        };
        let mut job = self
            .with_retry("submit_finetune", || self.provider.submit_finetune(&req))
            .map_err(|e| match e {
                ProviderError::Rejected(m) => LlmError::ProviderRejectedCorpus(m),
                other => self.lift(other),
            })?;
        job.submitted_corpus_digest = digest;
        Ok(job)
    }

    pub fn poll_job(&self, job: &FineTuneJob) -> Result<FineTuneJob, LlmError> {
        if job.job_id.is_empty() {
            return Err(LlmError::Config("job has no provider id".into()));
        }
        let mut fresh = self
            .with_retry("poll_job", || self.provider.job_status(&job.job_id))
            .map_err(|e| self.lift(e))?;
        if fresh.submitted_corpus_digest.is_empty() {
            fresh.submitted_corpus_digest = job.submitted_corpus_digest.clone();
        }
        Ok(fresh)
    }

    /// Polls until the job reaches a terminal state or `max_polls` is spent.
    pub fn wait_for_job(
        &self,
        job: &FineTuneJob,
        interval: Duration,
        max_polls: usize,
    ) -> Result<FineTuneJob, LlmError> {
        let mut current = job.clone();
        for i in 0..max_polls {
            if current.status.is_terminal() {
                break;
            }
            if i > 0 {
                std::thread::sleep(interval);
            }
            current = self.poll_job(&current)?;
        }
        Ok(current)
    }

    fn request(&self, source_id: &str, prompt: &str, model: &str) -> CompletionRequest {
        CompletionRequest {
            source_id: source_id.to_string(),
            model: model.to_string(),
            prompt: prompt.to_string(),
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_tokens,
        }
    }

    fn predict_one(&self, source_id: &str, prompt: &str, model: &str) -> Result<Estimate, LlmError> {
        let req = self.request(source_id, prompt, model);
        let raw = self
            .with_retry("complete", || self.provider.complete(&req))
            .map_err(|e| self.lift(e))?;
        Ok(Estimate::from_completion(source_id, raw))
    }

    pub fn predict(&self, prompt: &str, model: &str) -> Result<Estimate, LlmError> {
        self.predict_for("", prompt, model)
    }

    pub fn predict_for(&self, source_id: &str, prompt: &str, model: &str) -> Result<Estimate, LlmError> {
        if model.trim().is_empty() {
            return Err(LlmError::Config("model name is empty".into()));
        }
        self.predict_one(source_id, prompt, model)
    }

    /// Predicts every `(id, prompt)` pair. Output order matches input order;
    /// a failing item yields an unparsed [`Estimate`] carrying the error
    /// rather than aborting the batch.
    pub fn batch_predict(&self, items: &[(String, String)], model: &str) -> Result<Vec<Estimate>, LlmError> {
        if model.trim().is_empty() {
            return Err(LlmError::Config("model name is empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some((dup, _)) = items.iter().find(|(id, _)| !seen.insert(id.as_str())) {
            return Err(LlmError::Config(format!("duplicate id `{dup}` in batch")));
        }
        let results: Vec<Mutex<Option<Estimate>>> = items.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.cfg.max_concurrent_requests.min(items.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some((id, prompt)) = items.get(i) else {
                        break;
                    };
                    let est = self
                        .predict_one(id, prompt, model)
                        .unwrap_or_else(|e| Estimate::failed(id, &e));
                    *results[i].lock().expect("result slot") = Some(est);
                });
            }
        });
        Ok(results
            .into_iter()
            .map(|m| m.into_inner().expect("result slot").expect("every item visited"))
            .collect())
    }
}

/// Replaces every occurrence of `secret` in `text`.
pub fn redact(text: &str, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "[REDACTED]"),
        _ => text.to_string(),
    }
}
