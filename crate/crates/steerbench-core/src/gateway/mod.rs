//! Uniform completion interface over a live OpenAI-compatible chat API, a
//! deterministic simulated model, and a content-addressed replay cache.
//!
//! Every response carries a three-way token decomposition
//! (input / reasoning / output). Requests are checked against a
//! [`ModelProfile`] before anything touches the network, and in-flight
//! request count is bounded by a configurable limit.

pub mod cache;
pub mod openai;
pub mod simulated;

use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, ReplayCache};
pub use openai::RetryPolicy;
pub use simulated::{SimStyle, SimTarget, SimulatedModelConfig};

/// Environment variable holding the live API key.
pub const API_KEY_ENV: &str = "STEERBENCH_API_KEY";

/// Default bound on concurrent in-flight requests.
pub const DEFAULT_CONCURRENCY: usize = 8;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request violates model profile: {0}")]
    ProfileViolation(String),
    #[error("transport failure after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("corrupt cache entry {key}: {reason}")]
    CacheCorrupt { key: String, reason: String },
    #[error("missing API key: set {API_KEY_ENV}")]
    MissingApiKey,
    #[error("simulated backend needs a target (gold index / option count / salt) for this request")]
    SimTargetMissing,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A chat completion request. `tag` is a free-form audit label and is
/// excluded from the cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    #[serde(default)]
    pub tag: String,
}

/// Input / reasoning / output token counts for one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub reasoning_tokens: u64,
    pub output_tokens: u64,
}

impl std::ops::Add for TokenUsage {
    type Output = TokenUsage;
    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage {
            input_tokens: self.input_tokens + rhs.input_tokens,
            reasoning_tokens: self.reasoning_tokens + rhs.reasoning_tokens,
            output_tokens: self.output_tokens + rhs.output_tokens,
        }
    }
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub model_id: String,
    pub latency_ms: u64,
    pub from_cache: bool,
}

/// Capability flags for one model; violations are raised before any network
/// traffic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model_id: String,
    pub supports_temperature: bool,
    pub supports_system_role: bool,
    pub has_reasoning_tokens: bool,
}

/// Checks a request against a profile: temperature only where supported,
/// system messages only where supported, and at least one message.
pub fn check_profile(request: &ChatRequest, profile: &ModelProfile) -> Result<(), GatewayError> {
    if request.messages.is_empty() {
        return Err(GatewayError::ProfileViolation(
            "request has no messages".to_owned(),
        ));
    }
    if request.temperature.is_some() && !profile.supports_temperature {
        return Err(GatewayError::ProfileViolation(format!(
            "model {} does not accept a sampling temperature",
            profile.model_id
        )));
    }
    if !profile.supports_system_role
        && request.messages.iter().any(|m| m.role == Role::System)
    {
        return Err(GatewayError::ProfileViolation(format!(
            "model {} does not accept system messages",
            profile.model_id
        )));
    }
    Ok(())
}

/// Counting semaphore bounding in-flight requests.
struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    released: Condvar,
}

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter {
            max: max.max(1),
            in_flight: Mutex::new(0),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut count = self.in_flight.lock().expect("limiter poisoned");
        while *count >= self.max {
            count = self.released.wait(count).expect("limiter poisoned");
        }
        *count += 1;
        Permit { limiter: self }
    }
}

struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut count = self.limiter.in_flight.lock().expect("limiter poisoned");
        *count -= 1;
        self.limiter.released.notify_one();
    }
}

enum Backend {
    Live(openai::LiveClient),
    Simulated(SimulatedModelConfig),
}

/// A shareable completion gateway. All methods take `&self`; the gateway is
/// safe to use from many threads at once.
pub struct Gateway {
    backend: Backend,
    cache: Option<ReplayCache>,
    limiter: Limiter,
}

impl Gateway {
    /// A gateway backed by the deterministic simulated model.
    pub fn simulated(config: SimulatedModelConfig) -> Self {
        config.validate().expect("invalid simulated model config");
        Gateway {
            backend: Backend::Simulated(config),
            cache: None,
            limiter: Limiter::new(DEFAULT_CONCURRENCY),
        }
    }

    /// A live gateway; reads the API key from [`API_KEY_ENV`].
    pub fn live(base_url: impl Into<String>, retry: RetryPolicy) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| GatewayError::MissingApiKey)?;
        Ok(Self::live_with_key(base_url, api_key, retry))
    }

    /// A live gateway with an explicit key (used by tests).
    pub fn live_with_key(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        retry: RetryPolicy,
    ) -> Self {
        Gateway {
            backend: Backend::Live(openai::LiveClient::new(base_url.into(), api_key.into(), retry)),
            cache: None,
            limiter: Limiter::new(DEFAULT_CONCURRENCY),
        }
    }

    pub fn with_cache(mut self, cache: ReplayCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.limiter = Limiter::new(limit);
        self
    }

    pub fn concurrency(&self) -> usize {
        self.limiter.max
    }

    pub fn is_simulated(&self) -> bool {
        matches!(self.backend, Backend::Simulated(_))
    }

    /// Completes a request. Profile checks run first; then the replay cache
    /// is consulted (a hit returns the stored response with
    /// `from_cache = true` and incurs no new provider cost); a miss
    /// dispatches to the backend under the concurrency limit and persists
    /// the response. Simulated dispatch requires `sim` to name the gold
    /// option; live dispatch ignores it.
    pub fn complete(
        &self,
        request: &ChatRequest,
        profile: &ModelProfile,
        sim: Option<&SimTarget>,
    ) -> Result<ChatResponse, GatewayError> {
        check_profile(request, profile)?;

        let key = cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(mut stored) = cache.load(&key)? {
                stored.from_cache = true;
                return Ok(stored);
            }
        }

        let response = {
            let _permit = self.limiter.acquire();
            match &self.backend {
                Backend::Simulated(config) => {
                    let target = sim.ok_or(GatewayError::SimTargetMissing)?;
                    simulated::simulate(
                        request,
                        config,
                        target.gold_index,
                        target.n_options,
                        &target.salt,
                    )
                }
                Backend::Live(client) => client.complete(request)?,
            }
        };

        if let Some(cache) = &self.cache {
            cache.store(&key, request, &response)?;
        }
        Ok(response)
    }
}
