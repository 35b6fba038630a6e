//! Model backends: the deterministic scenario-table mock, the remote HTTP
//! adapter, and transcript replay.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::{CotStagePrompt, Stage};
use crate::imaging::decompress;

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("no mock scenario for fingerprint {0}")]
    ScenarioMissing(String),
    #[error("malformed backend exchange: {0}")]
    Malformed(String),
}

/// A text-generating model reachable with one prompt at a time.
pub trait VlmBackend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError>;
}

impl<T: VlmBackend + ?Sized> VlmBackend for std::sync::Arc<T> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationales {
    pub scene: String,
    pub topic: String,
    pub risk: String,
}

/// Canned staged responses for one exact image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScenario {
    pub fingerprint: String,
    pub scene: String,
    pub topic: String,
    pub risk: bool,
    pub rationales: Rationales,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    /// Sensitive items a model would list for this image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioTableError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("scenario table parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate fingerprint {0} in scenario table")]
    Duplicate(String),
}

/// Immutable fingerprint -> scenario table.
#[derive(Clone, Debug, Default)]
pub struct ScenarioTable {
    entries: HashMap<String, MockScenario>,
}

impl ScenarioTable {
    pub fn new(scenarios: Vec<MockScenario>) -> Result<Self, ScenarioTableError> {
        let mut entries = HashMap::with_capacity(scenarios.len());
        for s in scenarios {
            let fp = s.fingerprint.clone();
            if entries.insert(fp.clone(), s).is_some() {
                return Err(ScenarioTableError::Duplicate(fp));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioTableError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioTableError::Io(path.display().to_string(), e))?;
        Self::new(serde_json::from_str(&text)?)
    }

    /// Exact lookup; there is no fuzzy fallback.
    pub fn lookup(&self, fingerprint: &str) -> Result<&MockScenario, BackendError> {
        self.entries.get(fingerprint).ok_or_else(|| BackendError::ScenarioMissing(fingerprint.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Scenarios sorted by fingerprint.
    pub fn to_vec(&self) -> Vec<MockScenario> {
        let mut v: Vec<MockScenario> = self.entries.values().cloned().collect();
        v.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
        v
    }
}

/// Caption keywords the mock text model treats as privacy relevant.
pub const SENSITIVE_CAPTION_KEYWORDS: &[&str] = &[
    "id card",
    "identity card",
    "credit card",
    "bank card",
    "password",
    "transcript",
    "medical",
    "prescription",
    "passport",
    "login",
];

/// Offline backend answering from a [`ScenarioTable`] keyed by image fingerprint.
#[derive(Clone, Debug)]
pub struct MockBackend {
    table: std::sync::Arc<ScenarioTable>,
}

impl MockBackend {
    pub fn new(table: ScenarioTable) -> Self {
        Self { table: std::sync::Arc::new(table) }
    }

    pub fn table(&self) -> &ScenarioTable {
        &self.table
    }

    fn scenario(&self, prompt: &CotStagePrompt) -> Result<&MockScenario, BackendError> {
        let png = prompt
            .attached_image
            .as_ref()
            .ok_or_else(|| BackendError::Malformed(format!("{} prompt without image", prompt.stage)))?;
        let image = decompress(png).map_err(|e| BackendError::Malformed(e.to_string()))?;
        self.table.lookup(&image.fingerprint())
    }
}

impl VlmBackend for MockBackend {
    fn id(&self) -> String {
        "mock".into()
    }

    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError> {
        if prompt.stage == Stage::CaptionVerdict {
            let caption = prompt.prior_stage_outputs.first().map(|c| c.to_lowercase()).unwrap_or_default();
            return Ok(match SENSITIVE_CAPTION_KEYWORDS.iter().find(|k| caption.contains(*k)) {
                Some(k) => format!("RISK: YES — the description mentions a {k}"),
                None => "RISK: NO — the description mentions nothing sensitive".into(),
            });
        }
        let s = self.scenario(prompt)?;
        Ok(match prompt.stage {
            Stage::Scene => format!("SCENE: {} — {}", s.scene, s.rationales.scene),
            Stage::Topic => format!("TOPIC: {} — {}", s.topic, s.rationales.topic),
            Stage::Risk => format!("RISK: {} — {}", if s.risk { "YES" } else { "NO" }, s.rationales.risk),
            Stage::Caption => s
                .caption
                .clone()
                .ok_or_else(|| BackendError::Malformed(format!("scenario {} has no caption", s.fingerprint)))?,
            Stage::Extract => match &s.items {
                Some(items) if !items.is_empty() => items.join("\n"),
                Some(_) => "NONE".into(),
                None => return Err(BackendError::Malformed(format!("scenario {} has no item list", s.fingerprint))),
            },
            Stage::CaptionVerdict => unreachable!("handled above"),
        })
    }
}

/// Counting semaphore bounding concurrent remote calls.
#[derive(Debug)]
struct InFlight {
    limit: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.limit {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// JSONL file receiving every exchange verbatim.
    pub transcript: Option<PathBuf>,
}

impl RemoteConfig {
    /// Reads `PRIVAR_VLM_URL`, `PRIVAR_VLM_MODEL` and `PRIVAR_VLM_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var("PRIVAR_VLM_URL")
            .map_err(|_| BackendError::Transport("PRIVAR_VLM_URL is not set".into()))?;
        let model = std::env::var("PRIVAR_VLM_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into());
        let api_key = std::env::var("PRIVAR_VLM_KEY").ok().filter(|k| !k.is_empty());
        Ok(Self { url, model, api_key, timeout: Duration::from_secs(30), max_in_flight: 4, transcript: None })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub model: String,
    pub stage: Stage,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub key: String,
    pub backend: String,
    pub stage: Stage,
    pub prompt: String,
    pub response: String,
}

/// Stable key of a prompt: SHA-256 over stage, instruction text and image bytes.
pub fn prompt_key(prompt: &CotStagePrompt) -> String {
    let mut h = Sha256::new();
    h.update(prompt.stage.as_str().as_bytes());
    h.update([0]);
    h.update(prompt.instruction_text.as_bytes());
    h.update([0]);
    if let Some(img) = &prompt.attached_image {
        h.update(img);
    }
    hex::encode(h.finalize())
}

/// HTTP adapter: POSTs `{model, stage, prompt, image}` as JSON and reads the
/// reply text from `text`, `output` or `choices[0].message.content`.
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    in_flight: InFlight,
    log: Mutex<()>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let in_flight = InFlight { limit: config.max_in_flight.max(1), used: Mutex::new(0), freed: Condvar::new() };
        Self { config, agent, in_flight, log: Mutex::new(()) }
    }

    fn record(&self, prompt: &CotStagePrompt, response: &str) {
        let Some(path) = &self.config.transcript else { return };
        let entry = TranscriptEntry {
            key: prompt_key(prompt),
            backend: self.id(),
            stage: prompt.stage,
            prompt: prompt.instruction_text.clone(),
            response: response.to_string(),
        };
        let _guard = self.log.lock().unwrap_or_else(|e| e.into_inner());
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(path) {
            if let Ok(line) = serde_json::to_string(&entry) {
                let _ = writeln!(f, "{line}");
            }
        }
    }
}

fn reply_text(v: &serde_json::Value) -> Option<String> {
    v.get("text")
        .or_else(|| v.get("output"))
        .or_else(|| v.pointer("/choices/0/message/content"))
        .and_then(|t| t.as_str())
        .map(str::to_string)
}

impl VlmBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError> {
        let body = RemoteRequest {
            model: self.config.model.clone(),
            stage: prompt.stage,
            prompt: prompt.instruction_text.clone(),
            image: prompt.attached_image.as_ref().map(|b| STANDARD.encode(b)),
        };
        let _slot = self.in_flight.acquire();
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.config.timeout),
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| BackendError::Malformed(format!("reply is not JSON: {e}")))?;
        let reply = reply_text(&value).ok_or_else(|| BackendError::Malformed(format!("reply has no text: {text}")))?;
        self.record(prompt, &reply);
        Ok(reply)
    }
}

/// Answers from a transcript JSONL written by [`RemoteBackend`].
#[derive(Clone, Debug, Default)]
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn load(path: &Path) -> Result<Self, ScenarioTableError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioTableError::Io(path.display().to_string(), e))?;
        let mut responses = HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let entry: TranscriptEntry = serde_json::from_str(line)?;
            responses.insert(entry.key, entry.response);
        }
        Ok(Self { responses })
    }
}

impl VlmBackend for ReplayBackend {
    fn id(&self) -> String {
        "replay".into()
    }

    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError> {
        let key = prompt_key(prompt);
        self.responses
            .get(&key)
            .cloned()
            .ok_or_else(|| BackendError::Malformed(format!("no recorded {} response for prompt {key}", prompt.stage)))
    }
}
