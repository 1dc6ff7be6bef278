use std::time::Duration;

use super::{parse_completion, ChatClient, ChatError, ChatRequest, EndpointConfig, Secret};
use crate::parallel::Limiter;

const MAX_LOGGED_BODY: usize = 512;

/// Blocking HTTP client for an OpenAI-compatible chat endpoint.
///
/// Retries transport failures, 429 and 5xx with exponential backoff. At most
/// `parallelism` requests are in flight at once across all threads sharing
/// the client.
pub struct HttpChatClient {
    cfg: EndpointConfig,
    token: Secret,
    agent: ureq::Agent,
    limiter: Limiter,
}

impl HttpChatClient {
    /// Builds a client, reading the bearer token from `cfg.token_env`.
    pub fn new(cfg: EndpointConfig) -> Result<Self, ChatError> {
        let token = cfg.token_from_env();
        Self::with_token(cfg, token)
    }

    pub fn with_token(cfg: EndpointConfig, token: Secret) -> Result<Self, ChatError> {
        cfg.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs.max(1))))
            .build()
            .into();
        let limiter = Limiter::new(cfg.parallelism);
        Ok(Self {
            cfg,
            token,
            agent,
            limiter,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn send_once(&self, req: &ChatRequest, attempt: u32) -> Result<String, ChatError> {
        let url = self.cfg.endpoint_url();
        let mut builder = self.agent.post(&url).header("Content-Type", "application/json");
        if !self.token.is_empty() {
            builder = builder.header("Authorization", format!("Bearer {}", self.token.expose()));
        }
        let builder = builder
            .config()
            .timeout_global(Some(Duration::from_secs(req.timeout_secs.max(1))))
            .build();
        let mut resp = builder
            .send_json(req.to_wire())
            .map_err(|e| ChatError::Transport(self.token.redact(&e.to_string())))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ChatError::Transport(self.token.redact(&e.to_string())))?;
        log::debug!(
            "chat response status={status} body={}",
            self.token.redact(truncate(&body, MAX_LOGGED_BODY))
        );
        match status {
            200..=299 => parse_completion(&body),
            401 | 403 => Err(ChatError::AuthFailure(status)),
            429 => Err(ChatError::RateLimited {
                attempts: attempt + 1,
            }),
            _ => Err(ChatError::Status {
                status,
                body: self.token.redact(truncate(&body, MAX_LOGGED_BODY)),
            }),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    if s.len() <= max {
        return s;
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

impl ChatClient for HttpChatClient {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        req.validate()?;
        let _permit = self.limiter.acquire();
        log::debug!(
            "POST {} model={} messages={} images={}",
            self.cfg.endpoint_url(),
            req.model,
            req.messages.len(),
            req.messages.iter().map(|m| m.images.len()).sum::<usize>()
        );
        let mut attempt = 0;
        loop {
            match self.send_once(req, attempt) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transient() && attempt < self.cfg.retries => {
                    let delay = self.cfg.backoff(attempt);
                    log::warn!("chat attempt {} failed ({e}); retrying in {delay:?}", attempt + 1);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn model(&self) -> &str {
        &self.cfg.model
    }
}

impl std::fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatClient")
            .field("cfg", &self.cfg)
            .field("token", &self.token)
            .finish()
    }
}
