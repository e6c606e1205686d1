//! Uniform interface to text-generation backends.
//!
//! Two implementations: an HTTP client for completion-style endpoints (the
//! policy model and the judge model are two independently configured
//! instances), and a deterministic scripted mock for tests and offline runs.

mod http;
mod mock;

pub use http::{HttpBackend, HttpBackendConfig};
pub use mock::{FixtureRule, MockBackend};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::SamplingParams;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("rate limited, retry after {retry_after_secs:?}s")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("no fixture rule matched prompt: {prompt_tail:?}")]
    FixtureMiss { prompt_tail: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend cannot provide logprobs: {0}")]
    MissingLogprobs(String),
}

/// A generation request against a completion-style backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub params: SamplingParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
    /// Request per-token logprobs on the completions.
    #[serde(default)]
    pub logprobs: bool,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, params: SamplingParams) -> Self {
        Self {
            prompt: prompt.into(),
            params,
            stop: None,
            logprobs: false,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt.is_empty() {
            return Err(BackendError::InvalidRequest("prompt must be non-empty".into()));
        }
        self.params
            .validate()
            .map_err(|e| BackendError::InvalidRequest(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    pub finish_reason: FinishReason,
}

impl Completion {
    /// Sequence logprob: the sum over per-token logprobs.
    pub fn sequence_logprob(&self) -> Option<f64> {
        self.token_logprobs
            .as_ref()
            .map(|lps| lps.iter().map(|t| t.logprob).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub completions: Vec<Completion>,
    pub usage: Usage,
    /// Backend token count per completion, aligned with `completions`.
    pub completion_token_counts: Vec<u64>,
}

/// A text-generation backend handle. Shareable across concurrent tasks.
#[async_trait]
pub trait TextBackend: Send + Sync {
    /// Returns exactly `params.n` completions for the request.
    async fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError>;

    /// Backend-specific token count of `text`.
    async fn count_tokens(&self, text: &str) -> Result<u64, BackendError>;

    /// Teacher-forced per-token logprobs of `text` conditioned on `context`
    /// (echo-style scoring with zero new tokens, sliced to the text span).
    async fn echo_logprobs(
        &self,
        context: &str,
        text: &str,
    ) -> Result<Vec<TokenLogprob>, BackendError>;
}
