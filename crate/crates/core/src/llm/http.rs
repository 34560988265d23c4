use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{backoff_delay, LlmConfig, LlmError};
use crate::rng::rng_from;

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(LlmError),
}

/// Minimal chat-completions client with retry and full-jitter backoff.
pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    cfg: LlmConfig,
    network_calls: AtomicUsize,
}

impl HttpBackend {
    pub fn new(cfg: &LlmConfig) -> Result<Self, LlmError> {
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| LlmError::Config(format!("cannot build HTTP client: {e}")))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpBackend {
            client,
            endpoint: format!("{}/v1/chat/completions", cfg.base_url.trim_end_matches('/')),
            api_key,
            cfg: cfg.clone(),
            network_calls: AtomicUsize::new(0),
        })
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    /// Returns the reply text and the number of attempts used.
    pub async fn send(&self, system: Option<&str>, user: &str, jitter_seed: u64) -> Result<(String, u32), LlmError> {
        let mut messages = Vec::with_capacity(2);
        if let Some(s) = system {
            messages.push(Message { role: "system", content: s });
        }
        messages.push(Message { role: "user", content: user });
        let body = ChatRequest { model: &self.cfg.model_name, messages, temperature: self.cfg.temperature };
        let mut rng = rng_from(jitter_seed, &[]);
        let mut attempt = 0u32;
        loop {
            match self.attempt(&body).await {
                Attempt::Done(text) => return Ok((text, attempt + 1)),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(reason) if attempt >= self.cfg.max_retries => {
                    return Err(LlmError::Transport(format!("{reason} (gave up after {} attempts)", attempt + 1)));
                }
                Attempt::Retry(reason) => {
                    let delay = backoff_delay(self.cfg.backoff_base(), attempt, &mut rng);
                    log::warn!("attempt {} failed: {reason}; retrying in {delay:?}", attempt + 1);
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
            }
        }
    }

    async fn attempt(&self, body: &ChatRequest<'_>) -> Attempt {
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("request failed: {e}")),
        };
        let status = resp.status().as_u16();
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body failed: {e}")),
        };
        match status {
            200..=299 => match serde_json::from_str::<ChatResponse>(&text) {
                Ok(parsed) => match parsed.choices.into_iter().next().and_then(|c| c.message.content) {
                    Some(content) => Attempt::Done(content),
                    None => Attempt::Fail(LlmError::Protocol("response has no choices[0].message.content".into())),
                },
                Err(e) => Attempt::Fail(LlmError::Protocol(format!("malformed response body: {e}"))),
            },
            401 | 403 => Attempt::Fail(LlmError::Auth { status }),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fail(LlmError::Http { status, body: text.chars().take(500).collect() }),
        }
    }
}
