//! Chat-completion access with deterministic settings, a record/replay
//! cache, bounded concurrency, and a scripted mock model.
//!
//! Every request flows through [`Gateway::complete`]: cache lookup first,
//! then the backend (live HTTP or mock), then an append to the cache.  Two
//! identical requests therefore always yield byte-identical response text,
//! which is what makes evaluation runs resumable and replayable.

mod answer;
mod cache;
mod http;
mod mock;

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use answer::{
    match_option, yes_probability, yes_probability_renormalized, AnswerOutcome, AnswerSpace,
    SUMMARIZE_PROMPT,
};
pub use cache::{request_key, Cache};
pub use http::{live_request_count, HttpBackend, HttpConfig};
pub use mock::{script_mock, MockModel};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {detail}")]
    Auth { detail: String },
    #[error("transport failure after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("provider returned a malformed response: {detail}")]
    Protocol { detail: String },
    #[error("model {model} did not return the requested token logprobs")]
    ProviderRefusedLogprobs { model: String },
    #[error("response carries no token logprobs")]
    LogprobsMissing,
    #[error("no Yes-family token at the decision position")]
    YesTokenAbsent,
    #[error("mock fixture is invalid: {detail}")]
    Fixture { detail: String },
    #[error("no mock rule matches the request: {detail}")]
    FixtureMiss { detail: String },
    #[error("request has no turns")]
    EmptyRequest,
    #[error("cache failure: {detail}")]
    Cache { detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub text: String,
}

impl ChatTurn {
    pub fn user(text: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::User,
            text: text.into(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::Assistant,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub turns: Vec<ChatTurn>,
    pub temperature: f64,
    pub want_logprobs: bool,
    /// Alternatives requested per token position.  Not part of the response
    /// identity: it does not enter the cache key.
    pub top_logprobs: u8,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// An evaluation-pipeline request: temperature pinned to 0.0 so replies
    /// are as deterministic as the provider allows.
    pub fn evaluation(model: impl Into<String>, turns: Vec<ChatTurn>) -> Self {
        ChatRequest {
            model: model.into(),
            turns,
            temperature: 0.0,
            want_logprobs: false,
            top_logprobs: 5,
            max_tokens: 1024,
        }
    }

    pub fn with_logprobs(mut self) -> Self {
        self.want_logprobs = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAlternative {
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub alternatives: Vec<TokenAlternative>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    #[serde(default)]
    pub finish_reason: Option<String>,
    #[serde(default)]
    pub provider_meta: Option<serde_json::Value>,
    #[serde(default)]
    pub cache_hit: bool,
}

/// The outcome of extracting a structured answer from free-text replies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedAnswer {
    pub value: AnswerValue,
    /// The reply text the value was extracted from (or the last reply seen,
    /// for refusals).
    pub raw_final: String,
    /// 1 if the free-generation reply matched, 2 if the summarization
    /// follow-up was needed.
    pub rounds_used: u8,
    /// Full prompt attempts consumed, at most 3.  `Refusal` implies 3.
    pub attempts: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerValue {
    /// Index into the option list the stage was asked against.
    Choice(usize),
    /// The stage's designated unknown option.
    UnknownOption,
    /// Declined to rank two statements, calling them equally likely.
    EquallyLikely,
    /// No option matched after every round and retry.
    Refusal,
}

impl AnswerValue {
    pub fn is_refusal(self) -> bool {
        matches!(self, AnswerValue::Refusal)
    }
}

/// A model the gateway can query.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Maximum in-flight backend requests.
    pub concurrency: usize,
    /// Sustained request rate; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            concurrency: 4,
            requests_per_second: None,
        }
    }
}

struct TokenBucket {
    tokens: f64,
    capacity: f64,
    per_second: f64,
    last_refill: Instant,
}

impl TokenBucket {
    fn new(per_second: f64) -> Self {
        let capacity = per_second.max(1.0);
        TokenBucket {
            tokens: capacity,
            capacity,
            per_second,
            last_refill: Instant::now(),
        }
    }

    fn refill(&mut self) {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last_refill).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.per_second).min(self.capacity);
        self.last_refill = now;
    }

    fn take(&mut self) {
        loop {
            self.refill();
            if self.tokens >= 1.0 {
                self.tokens -= 1.0;
                return;
            }
            let wait = (1.0 - self.tokens) / self.per_second;
            std::thread::sleep(Duration::from_secs_f64(wait.max(0.001)));
        }
    }
}

pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Cache,
    free_slots: Mutex<usize>,
    slot_freed: Condvar,
    bucket: Option<Mutex<TokenBucket>>,
}

struct SlotGuard<'a>(&'a Gateway);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        let mut free = self.0.free_slots.lock().expect("slot lock");
        *free += 1;
        self.0.slot_freed.notify_one();
    }
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, cache: Cache, config: GatewayConfig) -> Self {
        Gateway {
            backend,
            cache,
            free_slots: Mutex::new(config.concurrency.max(1)),
            slot_freed: Condvar::new(),
            bucket: config
                .requests_per_second
                .filter(|r| *r > 0.0)
                .map(|r| Mutex::new(TokenBucket::new(r))),
        }
    }

    /// Mock-backed gateway with an in-memory cache, for tests.
    pub fn with_mock(mock: MockModel) -> Self {
        Gateway::new(Box::new(mock), Cache::in_memory(), GatewayConfig::default())
    }

    fn acquire_slot(&self) -> SlotGuard<'_> {
        let mut free = self.free_slots.lock().expect("slot lock");
        while *free == 0 {
            free = self.slot_freed.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }

    /// Issues one request: served from cache when possible, otherwise sent
    /// to the backend under the concurrency and rate limits and persisted.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if request.turns.is_empty() {
            return Err(GatewayError::EmptyRequest);
        }
        let key = request_key(request);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let response = {
            let _slot = self.acquire_slot();
            if let Some(bucket) = &self.bucket {
                bucket.lock().expect("bucket lock").take();
            }
            self.backend.complete(request)?
        };
        if request.want_logprobs
            && response
                .token_logprobs
                .as_ref()
                .is_none_or(|t| t.is_empty())
        {
            return Err(GatewayError::ProviderRefusedLogprobs {
                model: request.model.clone(),
            });
        }
        self.cache.put(&key, request, &response)?;
        Ok(response)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}
