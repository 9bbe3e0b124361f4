//! Backends that turn a prompt into completions.
//!
//! A [`Provider`] performs one raw call (HTTP or scripted). A [`Backend`]
//! wraps a provider with the response cache, the retry policy and the
//! concurrency bound, and is what the rest of the crate talks to through the
//! [`LlmBackend`] trait.

mod backend;
mod cache;
mod http;
mod mock;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

pub use backend::{Backend, BackendConfig, BackendStats, RetryPolicy};
pub use http::HttpProvider;
pub use mock::{mock_from_script, Script, ScriptEntry, ScriptedProvider, SCRIPT_FALLBACK_KEY};

/// Default `max_tokens` for scoring calls.
pub const SCORING_MAX_TOKENS: u32 = 64;
/// Default `max_tokens` for chain-of-thought generation.
pub const COT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub n_samples: u32,
    pub max_tokens: u32,
    pub want_logprobs: bool,
    pub top_logprobs_k: u32,
}

impl GenerationRequest {
    /// Greedy single completion with scoring defaults.
    pub fn greedy(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: 0.0,
            top_p: 1.0,
            n_samples: 1,
            max_tokens: SCORING_MAX_TOKENS,
            want_logprobs: false,
            top_logprobs_k: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |msg: String| Err(LlmError::InvalidRequest(msg));
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be >= 1".into());
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be >= 1".into());
        }
        if self.want_logprobs && self.top_logprobs_k == 0 {
            return bad("top_logprobs_k must be >= 1 when logprobs are requested".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAlternative {
    pub token: String,
    pub logprob: f64,
}

/// One emitted token with its top-k alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub top_logprobs: Vec<TokenAlternative>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub completions: Vec<String>,
    /// Per completion, per position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<Vec<TokenLogprob>>>,
    pub model_id: String,
    #[serde(default)]
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("credential error: {0}")]
    Credential(String),
    #[error("protocol error: {message} (body: {excerpt})")]
    Protocol { message: String, excerpt: String },
    #[error("no scripted completions for prompt fingerprint {fingerprint}")]
    ScriptedMiss { fingerprint: String },
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Http { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Timeout | ProviderError::Connect(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error("transport failed after {} attempt(s): {}", attempts.len(), attempts.join("; "))]
    Transport { attempts: Vec<String> },
    #[error("credential error: {0}")]
    Credential(String),
    #[error("protocol error: {message} (body: {excerpt})")]
    Protocol { message: String, excerpt: String },
    #[error("no scripted completions for prompt fingerprint {fingerprint}")]
    ScriptedMiss { fingerprint: String },
    #[error("invalid script: {0}")]
    Script(String),
    #[error("response cache: {0}")]
    Cache(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A single-attempt completion source.
#[async_trait]
pub trait Provider: Send + Sync {
    fn model_id(&self) -> &str;

    async fn complete(&self, req: &GenerationRequest) -> Result<GenerationResponse, ProviderError>;
}

/// The interface used by the prompt engine, the judge and the analyses.
#[async_trait]
pub trait LlmBackend: Send + Sync {
    fn model_id(&self) -> &str;

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, LlmError>;
}
