//! Offline providers for tests and dry runs.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{CompletionRequest, FineTuneJob, FineTuneRequest, JobStatus, Provider, ProviderError};
use crate::dataset::format_hours;
use crate::promptgen::{COMPLETION_PREFIX, COMPLETION_SUFFIX};

/// Checks that every non-blank line is a JSON object with string `prompt`
/// and `completion` fields. Errors cite the 1-based line number.
pub fn validate_corpus(corpus: &str) -> Result<usize, String> {
    let mut count = 0;
    for (i, line) in corpus.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| format!("line {}: invalid JSON: {e}", i + 1))?;
        for field in ["prompt", "completion"] {
            if !v.get(field).is_some_and(|f| f.is_string()) {
                return Err(format!("line {}: missing string field `{field}`", i + 1));
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err("corpus contains no examples".into());
    }
    Ok(count)
}

/// In-memory fine-tune registry. A job is `pending` on submission, `running`
/// on its first poll and `succeeded` from the second poll on.
#[derive(Debug, Default)]
pub struct MockJobs {
    jobs: Mutex<HashMap<String, (FineTuneJob, u32)>>,
}

impl MockJobs {
    pub fn submit(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError> {
        validate_corpus(&req.corpus).map_err(ProviderError::Rejected)?;
        let short = &req.corpus_digest[..req.corpus_digest.len().min(12)];
        let job = FineTuneJob {
            job_id: format!("mockjob-{short}"),
            status: JobStatus::Pending,
            result_model: None,
            submitted_corpus_digest: req.corpus_digest.clone(),
        };
        self.jobs
            .lock()
            .expect("job registry")
            .insert(job.job_id.clone(), (job.clone(), 0));
        Ok(job)
    }

    pub fn status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError> {
        let mut jobs = self.jobs.lock().expect("job registry");
        let (job, polls) = jobs
            .get_mut(job_id)
            .ok_or_else(|| ProviderError::UnknownJob(job_id.to_string()))?;
        *polls += 1;
        if *polls == 1 {
            job.status = JobStatus::Running;
        } else {
            job.status = JobStatus::Succeeded;
            let short = &job.submitted_corpus_digest[..job.submitted_corpus_digest.len().min(12)];
            job.result_model = Some(format!("mock-ft-{short}"));
        }
        Ok(job.clone())
    }
}

fn completion_text(hours: f64) -> String {
    format!("{COMPLETION_PREFIX}{}{COMPLETION_SUFFIX}", format_hours(hours))
}

/// Answers each prompt with the known target of its source record.
#[derive(Debug, Default)]
pub struct EchoOracleMock {
    targets: HashMap<String, f64>,
    jobs: MockJobs,
}

impl EchoOracleMock {
    pub fn new(targets: impl IntoIterator<Item = (String, f64)>) -> Self {
        EchoOracleMock {
            targets: targets.into_iter().collect(),
            jobs: MockJobs::default(),
        }
    }
}

impl Provider for EchoOracleMock {
    fn name(&self) -> &str {
        "mock-oracle"
    }

    fn submit_finetune(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError> {
        self.jobs.submit(req)
    }

    fn job_status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError> {
        self.jobs.status(job_id)
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        self.targets
            .get(&req.source_id)
            .map(|&h| completion_text(h))
            .ok_or_else(|| ProviderError::Rejected(format!("no target known for `{}`", req.source_id)))
    }
}

/// Answers every prompt with the same estimate.
#[derive(Debug, Default)]
pub struct ConstantMock {
    hours: f64,
    jobs: MockJobs,
}

impl ConstantMock {
    pub fn new(hours: f64) -> Self {
        ConstantMock {
            hours,
            jobs: MockJobs::default(),
        }
    }
}

impl Provider for ConstantMock {
    fn name(&self) -> &str {
        "mock-constant"
    }

    fn submit_finetune(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError> {
        self.jobs.submit(req)
    }

    fn job_status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError> {
        self.jobs.status(job_id)
    }

    fn complete(&self, _req: &CompletionRequest) -> Result<String, ProviderError> {
        Ok(completion_text(self.hours))
    }
}

type Fallback = Box<dyn Provider>;

/// Returns scripted raw text per source id; unscripted ids go to the
/// fallback provider, or fail if there is none.
#[derive(Default)]
pub struct ScriptedMock {
    script: HashMap<String, Result<String, ProviderError>>,
    fallback: Option<Fallback>,
    jobs: MockJobs,
}

impl ScriptedMock {
    pub fn new(script: impl IntoIterator<Item = (String, String)>) -> Self {
        ScriptedMock {
            script: script.into_iter().map(|(k, v)| (k, Ok(v))).collect(),
            ..Default::default()
        }
    }

    pub fn with_failure(mut self, id: impl Into<String>, err: ProviderError) -> Self {
        self.script.insert(id.into(), Err(err));
        self
    }

    pub fn with_fallback(mut self, fallback: Box<dyn Provider>) -> Self {
        self.fallback = Some(fallback);
        self
    }
}

impl Provider for ScriptedMock {
    fn name(&self) -> &str {
        "mock-scripted"
    }

    fn submit_finetune(&self, req: &FineTuneRequest) -> Result<FineTuneJob, ProviderError> {
        self.jobs.submit(req)
    }

    fn job_status(&self, job_id: &str) -> Result<FineTuneJob, ProviderError> {
        self.jobs.status(job_id)
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        match (self.script.get(&req.source_id), &self.fallback) {
            (Some(r), _) => r.clone(),
            (None, Some(f)) => f.complete(req),
            (None, None) => Err(ProviderError::Rejected(format!("no script for `{}`", req.source_id))),
        }
    }
}
