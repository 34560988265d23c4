//! Chat-completions gateway: HTTP client, response cache, mocks and verdict parsing.

mod batch;
mod cache;
mod http;
mod mock;
mod parse;

use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{classify_batch, BatchOptions, BatchOutcome, FallbackPolicy, PredictionRecord};
pub use cache::{prompt_hash, CompletionRecord, ResponseCache};
pub use http::HttpBackend;
pub use mock::{parse_inputs, MockPolicy, MockSpec};
pub use parse::{parse_label, Verdict};

use crate::prompt::Prompt;
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cache i/o error on {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no cached response for prompt {hash} and live requests are disabled")]
    CacheMiss { hash: String },
    #[error("scripted mock has no responses left")]
    MockExhausted,
    #[error("mock error: {0}")]
    Mock(String),
    #[error("unparseable reply for instance {index}: {raw:?}")]
    Unparseable { index: usize, raw: String },
    #[error("configuration error: {0}")]
    Config(String),
}

impl LlmError {
    /// Failures caused by the remote side or its absence, as opposed to bad input.
    pub fn is_transport(&self) -> bool {
        matches!(self, LlmError::Transport(_) | LlmError::Auth { .. } | LlmError::Http { .. } | LlmError::CacheMiss { .. })
    }
}

fn default_base_url() -> String {
    "https://api.openai.com".into()
}
fn default_model() -> String {
    "gpt-3.5-turbo".into()
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    /// Send the task instruction as a system message and the rest as the user message.
    pub system_message: bool,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: default_base_url(),
            model_name: default_model(),
            temperature: 0.0,
            max_retries: 5,
            backoff_base_ms: 500,
            timeout_ms: 60_000,
            max_in_flight: 8,
            system_message: false,
            api_key_env: default_api_key_env(),
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Config("temperature must be non-negative".into()));
        }
        if self.max_in_flight == 0 {
            return Err(LlmError::Config("max_in_flight must be at least 1".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(LlmError::Config("model_name is empty".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(LlmError::Config(format!("base_url `{}` is not an http(s) URL", self.base_url)));
        }
        Ok(())
    }

    pub fn backoff_base(&self) -> Duration {
        Duration::from_millis(self.backoff_base_ms)
    }
}

/// Upper bound of the delay before retry `attempt` (0-based): `base * 2^attempt`.
pub fn backoff_envelope(base: Duration, attempt: u32) -> Duration {
    base.saturating_mul(1u32.checked_shl(attempt.min(31)).unwrap_or(u32::MAX))
}

/// Full-jitter delay, uniform in `[0, backoff_envelope(base, attempt)]`.
pub fn backoff_delay(base: Duration, attempt: u32, rng: &mut Rng) -> Duration {
    let cap = backoff_envelope(base, attempt);
    cap.mul_f64(rng.random_range(0.0..=1.0))
}

pub(crate) fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub enum Backend {
    Http(HttpBackend),
    Mock(MockPolicy),
}

/// Result of one completion, cached or fresh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub raw: String,
    pub prompt_hash: String,
    pub attempts: u32,
    pub from_cache: bool,
}

/// Cache-fronted access to a backend.
pub struct Gateway {
    backend: Backend,
    model_name: String,
    system_message: bool,
    cache: Option<Mutex<ResponseCache>>,
    cache_only: bool,
    backend_calls: AtomicUsize,
}

impl Gateway {
    /// HTTP gateway. Without `live`, only cached responses are served.
    pub fn http(cfg: &LlmConfig, cache: Option<ResponseCache>, live: bool) -> Result<Self, LlmError> {
        cfg.validate()?;
        Ok(Gateway {
            backend: Backend::Http(HttpBackend::new(cfg)?),
            model_name: cfg.model_name.clone(),
            system_message: cfg.system_message,
            cache: cache.map(Mutex::new),
            cache_only: !live,
            backend_calls: AtomicUsize::new(0),
        })
    }

    pub fn mock(policy: MockPolicy, model_name: &str, cache: Option<ResponseCache>) -> Self {
        Gateway {
            backend: Backend::Mock(policy),
            model_name: model_name.to_string(),
            system_message: false,
            cache: cache.map(Mutex::new),
            cache_only: false,
            backend_calls: AtomicUsize::new(0),
        }
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    /// Calls that reached the backend (HTTP attempts or mock replies).
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
            + match &self.backend {
                Backend::Http(h) => h.network_calls(),
                Backend::Mock(_) => 0,
            }
    }

    pub fn hash(&self, prompt: &Prompt) -> String {
        prompt_hash(&self.model_name, &prompt.text())
    }

    pub async fn complete(&self, prompt: &Prompt) -> Result<Completion, LlmError> {
        let text = prompt.text();
        let hash = prompt_hash(&self.model_name, &text);
        if let Some(cache) = &self.cache {
            if let Some(rec) = cache.lock().expect("cache lock").get(&hash) {
                return Ok(Completion {
                    raw: rec.raw_response.clone(),
                    prompt_hash: hash,
                    attempts: rec.attempt_count,
                    from_cache: true,
                });
            }
        }
        let (raw, attempts) = match &self.backend {
            Backend::Mock(policy) => {
                self.backend_calls.fetch_add(1, Ordering::SeqCst);
                (policy.respond(&text)?, 1)
            }
            Backend::Http(_) if self.cache_only => return Err(LlmError::CacheMiss { hash }),
            Backend::Http(client) => {
                let seed = u64::from_str_radix(&hash[..16], 16).unwrap_or(0);
                if self.system_message {
                    client.send(Some(&prompt.part1_task), &prompt.body_without_task(), seed).await?
                } else {
                    client.send(None, &text, seed).await?
                }
            }
        };
        if let Some(cache) = &self.cache {
            cache.lock().expect("cache lock").insert(CompletionRecord {
                prompt_hash: hash.clone(),
                model_name: self.model_name.clone(),
                raw_response: raw.clone(),
                timestamp: unix_now(),
                attempt_count: attempts,
            })?;
        }
        Ok(Completion { raw, prompt_hash: hash, attempts, from_cache: false })
    }
}

/// Runs a future to completion on a fresh single-threaded runtime.
pub fn block_on<F: Future>(fut: F) -> Result<F::Output, LlmError> {
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| LlmError::Config(format!("cannot start async runtime: {e}")))?;
    Ok(rt.block_on(fut))
}
