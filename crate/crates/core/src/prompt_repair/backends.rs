//! Completion backends: deterministic test doubles and an OpenAI-compatible HTTP client.

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use crate::corpus::TestCase;
use crate::error::{Error, Result};
use crate::paths::{read_string, RelPath};

/// Everything a backend may look at for one call.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub case: &'a TestCase,
    pub target: &'a RelPath,
    /// Current text of the target script.
    pub current: &'a str,
    /// 1-based repair round.
    pub round: u32,
    /// 1-based index of this call within the run.
    pub call_index: u32,
}

pub trait CompletionBackend: Send + Sync {
    /// Backend and model name, as recorded in run records.
    fn identity(&self) -> String;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String>;
    /// Request settings worth recording with each run. Never includes credentials.
    fn settings(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

/// Answers with the pristine script, recovered from the case's injection records.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    pub identity: String,
}

impl Default for OracleBackend {
    fn default() -> Self {
        OracleBackend { identity: "oracle".into() }
    }
}

impl CompletionBackend for OracleBackend {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> Result<String> {
        r.case
            .pristine(r.target)
            .ok_or_else(|| Error::BackendFailure(format!("no pristine text for {} in {}", r.target, r.case.case_id)))
    }
}

/// Answers with the script it was given.
#[derive(Debug, Clone)]
pub struct NullBackend {
    pub identity: String,
}

impl Default for NullBackend {
    fn default() -> Self {
        NullBackend { identity: "null".into() }
    }
}

impl CompletionBackend for NullBackend {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> Result<String> {
        Ok(r.current.to_string())
    }
}

/// Serves recorded responses: `<root>/<case_id>/NNN.txt` when that directory
/// exists, else `<root>/NNN.txt`, where NNN is the call index.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    pub identity: String,
    pub root: PathBuf,
}

impl ReplayBackend {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ReplayBackend { identity: "replay".into(), root: root.into() }
    }

    pub fn response_path(&self, case_id: &str, call_index: u32) -> PathBuf {
        let per_case = self.root.join(case_id);
        let dir = if per_case.is_dir() { per_case } else { self.root.clone() };
        dir.join(format!("{call_index:03}.txt"))
    }
}

impl CompletionBackend for ReplayBackend {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> Result<String> {
        let path = self.response_path(&r.case.case_id, r.call_index);
        if !path.is_file() {
            return Err(Error::BackendFailure(format!("no recorded response at {}", path.display())));
        }
        read_string(&path)
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn enter(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Chat-completions client for any OpenAI-compatible endpoint.
#[derive(Debug)]
pub struct OpenAiBackend {
    pub identity: String,
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub temperature: Option<f64>,
    pub timeout: Duration,
    gate: Gate,
    agent: ureq::Agent,
}

impl OpenAiBackend {
    pub fn new(
        endpoint: &str,
        model: &str,
        api_key_env: Option<String>,
        timeout: Duration,
        max_concurrent: usize,
    ) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        OpenAiBackend {
            identity: model.to_string(),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key_env,
            temperature: None,
            timeout,
            gate: Gate::new(max_concurrent),
            agent,
        }
    }

    fn api_key(&self) -> Result<Option<String>> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| Error::BackendFailure(format!("environment variable {var} is not set"))),
        }
    }
}

impl CompletionBackend for OpenAiBackend {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn settings(&self) -> serde_json::Value {
        json!({ "endpoint": self.endpoint, "model": self.model, "temperature": self.temperature })
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> Result<String> {
        let key = self.api_key()?;
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": r.prompt}],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        let _slot = self.gate.enter();
        let url = format!("{}/chat/completions", self.endpoint);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(k) = key {
            req = req.header("Authorization", format!("Bearer {k}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::BackendFailure(format!("{url}: {e}")))?;
        let status = resp.status();
        let text = resp.body_mut().read_to_string().map_err(|e| Error::BackendFailure(format!("{url}: {e}")))?;
        if !status.is_success() {
            return Err(Error::BackendFailure(format!(
                "{url}: HTTP {status}: {}",
                crate::sandbox::truncate_tail(&text, 500)
            )));
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| Error::BackendFailure(format!("{url}: invalid JSON: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::BackendFailure(format!("{url}: response has no choices[0].message.content")))
    }
}
