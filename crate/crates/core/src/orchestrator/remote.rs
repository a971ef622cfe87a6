use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::policy::{Policy, PolicyError, PolicyReply, PolicySession};
use crate::memory::PromptBundle;

pub const SYSTEM_PROMPT: &str = "You are a time-series forecasting agent working in three stages: \
feature extraction, prediction, and reflection with output. Follow the output contract of each \
message exactly and only use the allowed actions it lists.";

/// Connection settings for an OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1".into(),
            api_key: None,
            model: "policy".into(),
            temperature: 0.0,
            max_tokens: 4096,
            timeout_secs: 120,
        }
    }
}

impl RemoteConfig {
    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Policy backed by a chat completions server. Every turn is sent as a fresh
/// system + user exchange; the rendered prompt already carries all state.
#[derive(Debug, Clone)]
pub struct RemotePolicy {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemotePolicy {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn complete(&self, user: &str) -> Result<PolicyReply, PolicyError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut req = self.agent.post(&self.config.url());
        if let Some(key) = &self.config.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let text = r.into_string().unwrap_or_default();
                return Err(PolicyError::Transport(format!("HTTP {code}: {}", text.chars().take(200).collect::<String>())));
            }
            Err(e) => return Err(PolicyError::Transport(e.to_string())),
        };
        let doc: Value = resp
            .into_json()
            .map_err(|e| PolicyError::Protocol(format!("response is not JSON: {e}")))?;
        let text = doc
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| PolicyError::Protocol("missing choices[0].message.content".into()))?
            .to_string();
        let completion_tokens = doc.pointer("/usage/completion_tokens").and_then(Value::as_u64);
        Ok(PolicyReply { text, completion_tokens })
    }
}

struct RemoteSession<'a> {
    policy: &'a RemotePolicy,
}

impl PolicySession for RemoteSession<'_> {
    fn respond(&mut self, _bundle: &PromptBundle, rendered: &str) -> Result<PolicyReply, PolicyError> {
        self.policy.complete(rendered)
    }
}

impl Policy for RemotePolicy {
    fn session(&self) -> Box<dyn PolicySession + '_> {
        Box::new(RemoteSession { policy: self })
    }
}
