//! OpenAI-compatible chat-completion mutation with retry and backoff.

use std::sync::Arc;
use std::time::Duration;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::meta_prompt::{build_meta_prompt, ReplyParser};
use super::{choose_model, ChildSlot, ModelSpec, MutationError, MutationRequest};
use crate::error::ConfigError;
use crate::genome::{Origin, Prompt};

/// Environment variable holding the bearer token for chat providers.
pub const API_KEY_ENV: &str = "EVOLVE_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("response carried no completion text")]
    EmptyBody,
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Decode(String),
}

/// One request/response exchange with a chat provider. Implementations must
/// tolerate concurrent calls from several island workers.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, model: &ModelSpec, messages: &[ChatMessage]) -> Result<String, TransportError>;
}

/// Request body for `POST {endpoint}/chat/completions`.
pub fn chat_request_body(model: &ModelSpec, messages: &[ChatMessage]) -> serde_json::Value {
    json!({
        "model": model.model_id,
        "messages": messages,
        "temperature": model.temperature,
        "max_tokens": model.max_tokens,
    })
}

/// Completion text of the first choice.
pub fn extract_completion(body: &str) -> Result<String, TransportError> {
    if body.trim().is_empty() {
        return Err(TransportError::EmptyBody);
    }
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| TransportError::Decode(e.to_string()))?;
    match value.pointer("/choices/0/message/content").and_then(|v| v.as_str()) {
        Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
        _ => Err(TransportError::EmptyBody),
    }
}

pub fn completions_url(endpoint_url: &str) -> String {
    format!("{}/chat/completions", endpoint_url.trim_end_matches('/'))
}

/// Blocking HTTP transport. The bearer token is optional so local servers
/// without authentication work too.
#[derive(Debug, Clone, Default)]
pub struct HttpTransport {
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(api_key: Option<String>) -> Self {
        Self { api_key }
    }

    pub fn from_env() -> Self {
        Self::new(std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, model: &ModelSpec, messages: &[ChatMessage]) -> Result<String, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(model.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let mut request = agent.post(&completions_url(&model.endpoint_url));
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(chat_request_body(model, messages))
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(TransportError::Status(status));
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        extract_completion(&body)
    }
}

/// Exponential backoff between attempts: `base · factor^(n−1)` before retry n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { base: Duration::from_secs(1), factor: 2 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        self.base * self.factor.saturating_pow(retry.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmMutation {
    pub child: Prompt,
    pub model_id: String,
    pub retries: u32,
}

/// Weighted ensemble of chat models acting as a mutation operator.
#[derive(Clone)]
pub struct LlmMutator {
    ensemble: Vec<ModelSpec>,
    transport: Arc<dyn ChatTransport>,
    retry: RetryPolicy,
    parser: ReplyParser,
}

impl std::fmt::Debug for LlmMutator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmMutator")
            .field("ensemble", &self.ensemble)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

impl LlmMutator {
    pub fn new(
        ensemble: Vec<ModelSpec>,
        transport: Arc<dyn ChatTransport>,
        retry: RetryPolicy,
        parser: ReplyParser,
    ) -> Result<Self, ConfigError> {
        if ensemble.is_empty() {
            return Err(ConfigError::missing("models"));
        }
        ensemble.iter().try_for_each(ModelSpec::validate)?;
        Ok(Self { ensemble, transport, retry, parser })
    }

    pub fn ensemble(&self) -> &[ModelSpec] {
        &self.ensemble
    }

    pub fn mutate<R: Rng>(
        &self,
        request: &MutationRequest,
        rng: &mut R,
        slot: &ChildSlot,
    ) -> Result<LlmMutation, MutationError> {
        let model = choose_model(&self.ensemble, rng.gen())?;
        let messages = [ChatMessage { role: "system".into(), content: build_meta_prompt(request) }];
        let mut retries = 0;
        let reply = loop {
            match self.transport.complete(model, &messages) {
                Ok(reply) => break reply,
                Err(e) if retries < model.max_retries => {
                    retries += 1;
                    let delay = self.retry.delay(retries);
                    warn!("model {} attempt {} failed ({e}); retry {retries} in {delay:?}", model.model_id, retries);
                    std::thread::sleep(delay);
                }
                Err(e) => {
                    return Err(MutationError::Transport { attempts: retries + 1, last: e.to_string() });
                }
            }
        };
        let text = self.parser.parse(&reply)?;
        let child = Prompt::derived(
            slot.id.clone(),
            text,
            request.parent.id.clone(),
            slot.island_id,
            slot.iteration,
            Origin::LlmMutation,
        )
        .map_err(|e| MutationError::Parse(e.to_string()))?;
        Ok(LlmMutation { child, model_id: model.model_id.clone(), retries })
    }
}
