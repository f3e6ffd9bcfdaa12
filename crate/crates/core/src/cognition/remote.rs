use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CognitionBackend, DecisionRequest};
use crate::error::BackendError;

/// Environment variable holding the bearer credential.
pub const API_KEY_ENV: &str = "EXEMPLAR_SIM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com".into(),
            model: "gpt-4o".into(),
            temperature: 0.7,
            max_attempts: 3,
            backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("config", &self.config).finish_non_exhaustive()
    }
}

enum Failure {
    Retryable(String),
    Fatal(BackendError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig, api_key: impl Into<String>) -> Result<Self, BackendError> {
        if config.base_url.trim().is_empty() || config.model.trim().is_empty() {
            return Err(BackendError::NotConfigured("base_url and model must be set".into()));
        }
        if config.max_attempts == 0 {
            return Err(BackendError::NotConfigured("max_attempts must be at least 1".into()));
        }
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build()
            .new_agent();
        Ok(Self { config, api_key: api_key.into(), agent })
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(config: RemoteConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::NotConfigured(format!("environment variable {API_KEY_ENV} is not set")))?;
        Self::new(config, key)
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn body(&self, request: &DecisionRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.agent.archetype.profile_text},
                {"role": "user", "content": request.prompt},
            ],
            "temperature": self.config.temperature,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let mut response = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| Failure::Retryable(e.to_string()))?;
        if status >= 500 {
            return Err(Failure::Retryable(format!("HTTP {status}: {text}")));
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(BackendError::Status { status, body: text }));
        }
        extract_content(&text).map_err(Failure::Fatal)
    }
}

fn extract_content(text: &str) -> Result<String, BackendError> {
    let envelope: Value = serde_json::from_str(text).map_err(|e| BackendError::Envelope(e.to_string()))?;
    envelope
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Envelope("missing choices[0].message.content".into()))
}

impl CognitionBackend for RemoteBackend {
    fn decide(&mut self, request: &DecisionRequest) -> Result<String, BackendError> {
        let body = self.body(request);
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&body) {
                Ok(content) => return Ok(content),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(message)) => {
                    last = message;
                    if attempt < self.config.max_attempts {
                        let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                        thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(BackendError::Transport { attempts: self.config.max_attempts, message: last })
    }
}
