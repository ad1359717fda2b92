use std::time::Duration;

use serde::Deserialize;

use super::{ChatRequest, LlmError};

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

/// Chat-completion access. Implementations return the reply text verbatim.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct HttpChatClient {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl HttpChatClient {
    /// `base_url` is the API root, e.g. `https://api.openai.com/v1`.
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        HttpChatClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Reads the API key from `env_var`; an unset or empty variable is an error.
    pub fn from_env(base_url: impl Into<String>, env_var: &str, timeout: Duration) -> Result<Self, LlmError> {
        match std::env::var(env_var) {
            Ok(key) if !key.is_empty() => Ok(Self::new(base_url, Some(key), timeout)),
            _ => Err(LlmError::MissingCredentials(env_var.to_string())),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

/// Pulls `error.message` out of an error body when there is one.
fn provider_message(body: &str) -> String {
    serde_json::from_str::<serde_json::Value>(body)
        .ok()
        .and_then(|v| v.pointer("/error/message").and_then(|m| m.as_str()).map(str::to_string))
        .unwrap_or_else(|| body.trim().to_string())
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let endpoint = self.endpoint();
        let mut req = self.agent.post(&endpoint);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = match req.send_json(request) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                return Err(LlmError::Status {
                    status,
                    message: provider_message(&body),
                });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(LlmError::Transport {
                    endpoint,
                    message: t.to_string(),
                })
            }
        };
        let completion: Completion = resp
            .into_json()
            .map_err(|e| LlmError::Protocol(format!("malformed response body: {e}")))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Protocol("response has no choices[0].message.content".into()))
    }
}
