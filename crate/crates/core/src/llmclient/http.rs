//! JSON-over-HTTP provider.
//!
//! Endpoints, relative to `base_url`:
//! - `POST /fine-tunes` with `{model, training_file, corpus_digest, hyperparameters}`
//! - `GET /fine-tunes/{id}` returning `{id, status, fine_tuned_model}`
//! - `POST /completions` with `{model, prompt, temperature, max_tokens}`
//!   returning `{"choices": [{"text": ...}]}`

use std::time::Duration;

use serde_json::{json, Value};
use ureq::http::Response;
use ureq::{Agent, Body};

use super::{
    redact, CompletionRequest, FineTuneJob, FineTuneRequest, JobStatus, Provider, ProviderConfig,
    ProviderError,
};

pub struct HttpProvider {
    agent: Agent,
    base_url: String,
    key_var: String,
}

impl HttpProvider {
    pub fn new(cfg: &ProviderConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(cfg.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider {
            agent,
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
            key_var: cfg.api_key_env_var.clone(),
        }
    }

    fn key(&self) -> Result<String, ProviderError> {
        match std::env::var(&self.key_var) {
            Ok(k) if !k.is_empty() => Ok(k),
            _ => Err(ProviderError::Auth(format!(
                "environment variable {} is not set",
                self.key_var
            ))),
        }
    }

    fn send(&self, method: &str, path: &str, body: Option<Value>) -> Result<Value, ProviderError> {
        let key = self.key()?;
        let url = format!("{}{path}", self.base_url);
        log::debug!("{method} {url}");
        let auth = format!("Bearer {key}");
        let result = match body {
            Some(b) => self.agent.post(&url).header("Authorization", &auth).send_json(&b),
            None => self.agent.get(&url).header("Authorization", &auth).call(),
        };
        let resp = result.map_err(|e| ProviderError::Network(redact(&e.to_string(), Some(&key))))?;
        let out = interpret(resp);
        if let Err(e) = &out {
            log::debug!("{method} {url} failed: {}", redact(&e.to_string(), Some(&key)));
        }
        out
    }
}

fn interpret(mut resp: Response<Body>) -> Result<Value, ProviderError> {
    let status = resp.status().as_u16();
    let retry_after = resp
        .headers()
        .get("retry-after")
        .and_then(|v| v.to_str().ok())
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(Duration::from_secs);
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ProviderError::Network(e.to_string()))?;
    match status {
        200..=299 => serde_json::from_str(&text)
            .map_err(|e| ProviderError::InvalidResponse(format!("body is not JSON: {e}"))),
        401 | 403 => Err(ProviderError::Auth(error_message(&text))),
        400 | 422 => Err(ProviderError::Rejected(error_message(&text))),
        404 => Err(ProviderError::UnknownJob(error_message(&text))),
        429 => Err(ProviderError::RateLimited { retry_after }),
        _ => Err(ProviderError::Server {
            status,
            message: error_message(&text),
        }),
    }
}

/// The provider's own message, verbatim when it sends `{"error": {"message"}}`
/// or `{"error": "..."}`.
fn error_message(body: &str) -> String {
    let v: Option<Value> = serde_json::from_str(body).ok();
    v.as_ref()
        .and_then(|v| v.get("error"))
        .and_then(|e| e.get("message").and_then(Value::as_str).or_else(|| e.as_str()))
        .map(str::to_string)
        .unwrap_or_else(|| body.trim().to_string())
}

fn parse_job(v: &Value, digest: &str) -> Result<FineTuneJob, ProviderError> {
    let id = v
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::InvalidResponse("fine-tune response has no id".into()))?;
    let status = match v.get("status").and_then(Value::as_str) {
        Some("pending" | "queued" | "validating_files") => JobStatus::Pending,
        Some("running") => JobStatus::Running,
        Some("succeeded") => JobStatus::Succeeded,
        Some("failed" | "cancelled") => JobStatus::Failed,
        other => {
            return Err(ProviderError::InvalidResponse(format!(
                "unrecognized job status {other:?}"
            )))
        }
    };
    let model = v
        .get("fine_tuned_model")
        .and_then(Value::as_str)
        .map(str::to_string);
    let model = if status == JobStatus::Succeeded { model } else { None };
    FineTuneJob::new(id.to_string(), status, model, digest.to_string())
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn submit_finetune(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError> {
        let body = json!({
            "model": req.base_model,
            "training_file": req.corpus,
            "corpus_digest": req.corpus_digest,
            "hyperparameters": req.hyperparameters,
        });
        let v = self.send("POST", "/fine-tunes", Some(body))?;
        parse_job(&v, &req.corpus_digest)
    }

    fn job_status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError> {
        let v = self
            .send("GET", &format!("/fine-tunes/{job_id}"), None)
            .map_err(|e| match e {
                ProviderError::UnknownJob(_) => ProviderError::UnknownJob(job_id.to_string()),
                other => other,
            })?;
        parse_job(&v, "")
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        let v = self.send("POST", "/completions", Some(serde_json::to_value(req).expect("request serializes")))?;
        v.pointer("/choices/0/text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::InvalidResponse("no choices[0].text in completion".into()))
    }
}
