//! Chat-completion transport used by the auditor, state-equivalence oracle,
//! enricher, instruction generator and policy, plus offline stand-ins.
//!
//! The wire shape is the OpenAI-compatible `POST {base}/v1/chat/completions`
//! request/response record. Every caller depends on the [`ChatClient`]
//! trait, so pipelines run unchanged against [`HttpChatClient`] or a stub.

mod http;
mod judge;
mod stub;

use std::fmt;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpChatClient;
pub use judge::{
    build_audit_prompt, parse_verdict, ChatJudge, JudgeError, JudgeRequest, JudgeStep, Judgement,
    RuleJudge, TaskCompletionJudge, Verdict,
};
pub use stub::{CannedChat, FnChat, ScriptedChat};

pub const DEFAULT_TOKEN_ENV: &str = "GUINAV_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageAttachment {
    pub mime: String,
    /// Standard base64 without a data-URL prefix.
    pub data: String,
}

impl ImageAttachment {
    pub fn from_bytes(mime: &str, bytes: &[u8]) -> Self {
        Self {
            mime: mime.to_string(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.mime, self.data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageAttachment>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            images: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            model: model.into(),
            messages,
            temperature: 0.0,
            max_tokens: 1024,
            timeout_secs: 60,
        }
    }

    pub fn validate(&self) -> Result<(), ChatError> {
        if self.messages.is_empty() {
            return Err(ChatError::InvalidRequest("request has no messages".into()));
        }
        for (i, m) in self.messages.iter().enumerate() {
            for img in &m.images {
                if base64::engine::general_purpose::STANDARD
                    .decode(&img.data)
                    .is_err()
                {
                    return Err(ChatError::InvalidRequest(format!(
                        "message {i} carries an image that is not valid base64"
                    )));
                }
            }
        }
        Ok(())
    }

    /// OpenAI-compatible request body.
    pub fn to_wire(&self) -> serde_json::Value {
        let messages: Vec<serde_json::Value> = self
            .messages
            .iter()
            .map(|m| {
                let content = if m.images.is_empty() {
                    serde_json::Value::String(m.text.clone())
                } else {
                    let mut parts = vec![serde_json::json!({"type": "text", "text": m.text})];
                    parts.extend(m.images.iter().map(|img| {
                        serde_json::json!({"type": "image_url", "image_url": {"url": img.data_url()}})
                    }));
                    serde_json::Value::Array(parts)
                };
                serde_json::json!({"role": m.role, "content": content})
            })
            .collect();
        serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

/// Extracts the first choice's text from a chat-completions response body.
pub fn parse_completion(body: &str) -> Result<String, ChatError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| ChatError::MalformedResponse(format!("response is not JSON: {e}")))?;
    let content = value
        .pointer("/choices/0/message/content")
        .ok_or_else(|| ChatError::MalformedResponse("no choices[0].message.content".into()))?;
    match content {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(|t| t.as_str()))
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(ChatError::MalformedResponse(
            "message content is neither text nor parts".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    AuthFailure(u16),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl ChatError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ChatError::Transport(_) | ChatError::RateLimited { .. })
            || matches!(self, ChatError::Status { status, .. } if *status >= 500)
    }
}

pub trait ChatClient: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError>;

    /// Model name requests should carry.
    fn model(&self) -> &str {
        "stub"
    }
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        (**self).chat(req)
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}

impl<C: ChatClient + ?Sized> ChatClient for std::sync::Arc<C> {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        (**self).chat(req)
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}

/// An API token. Never printed.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Replaces every occurrence of the secret in `text`.
    pub fn redact(&self, text: &str) -> String {
        if self.0.is_empty() {
            text.to_string()
        } else {
            text.replace(&self.0, "[REDACTED]")
        }
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret([REDACTED])")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub parallelism: usize,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            model: "default".into(),
            token_env: DEFAULT_TOKEN_ENV.into(),
            retries: 3,
            backoff_ms: 500,
            max_backoff_ms: 8_000,
            parallelism: 4,
            timeout_secs: 60,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ChatError> {
        if self.parallelism == 0 {
            return Err(ChatError::InvalidRequest("parallelism must be >= 1".into()));
        }
        if self.base_url.is_empty() {
            return Err(ChatError::InvalidRequest("base_url is empty".into()));
        }
        Ok(())
    }

    pub fn endpoint_url(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Reads the token from the configured environment variable.
    pub fn token_from_env(&self) -> Secret {
        Secret::new(std::env::var(&self.token_env).unwrap_or_default())
    }

    /// Delay before retry number `attempt` (0-based): exponential, capped.
    pub fn backoff(&self, attempt: u32) -> std::time::Duration {
        let factor = 1u64.checked_shl(attempt.min(20)).unwrap_or(u64::MAX);
        std::time::Duration::from_millis(
            self.backoff_ms.saturating_mul(factor).min(self.max_backoff_ms),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let mut msg = ChatMessage::user("look");
        msg.images.push(ImageAttachment::from_bytes("image/png", b"\x89PNG"));
        let req = ChatRequest::new("m", vec![ChatMessage::system("sys"), msg]);
        req.validate().unwrap();
        let wire = req.to_wire();
        assert_eq!(wire["model"], "m");
        assert_eq!(wire["messages"][0]["content"], "sys");
        assert_eq!(wire["messages"][1]["content"][0]["type"], "text");
        assert!(wire["messages"][1]["content"][1]["image_url"]["url"]
            .as_str()
            .unwrap()
            .starts_with("data:image/png;base64,"));
    }

    #[test]
    fn request_validation() {
        assert!(ChatRequest::new("m", vec![]).validate().is_err());
        let mut msg = ChatMessage::user("x");
        msg.images.push(ImageAttachment {
            mime: "image/png".into(),
            data: "not base64!!".into(),
        });
        assert!(ChatRequest::new("m", vec![msg]).validate().is_err());
    }

    #[test]
    fn completion_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(parse_completion(body).unwrap(), "hi");
        assert!(matches!(
            parse_completion(r#"{"choices":[]}"#),
            Err(ChatError::MalformedResponse(_))
        ));
        assert!(matches!(
            parse_completion("<html>"),
            Err(ChatError::MalformedResponse(_))
        ));
    }

    #[test]
    fn secrets_never_print() {
        let s = Secret::new("sk-abc123");
        assert!(!format!("{s:?}").contains("abc123"));
        assert_eq!(s.redact("Bearer sk-abc123 ok"), "Bearer [REDACTED] ok");
    }

    #[test]
    fn backoff_grows_and_caps() {
        let cfg = EndpointConfig {
            backoff_ms: 100,
            max_backoff_ms: 350,
            ..EndpointConfig::default()
        };
        let ms: Vec<u128> = (0..4).map(|a| cfg.backoff(a).as_millis()).collect();
        assert_eq!(ms, vec![100, 200, 350, 350]);
    }
}
