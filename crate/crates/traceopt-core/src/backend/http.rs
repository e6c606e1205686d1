//! HTTP client for completion-style serving endpoints.
//!
//! Speaks the de-facto completion schema: POST `{base_url}/completions` with
//! prompt / n / temperature / top_p / max_tokens / stop / seed / logprobs,
//! reading `choices[].text`, `choices[].logprobs`, and `usage` back. Retries
//! transport failures and 5xx/429 with bounded exponential backoff (3
//! attempts), then surfaces `BackendUnavailable` or `RateLimited`.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::{
    BackendError, Completion, FinishReason, GenerationRequest, GenerationResult, TextBackend,
    TokenLogprob, Usage,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpBackendConfig {
    /// e.g. "http://localhost:30000/v1"
    pub base_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub request_timeout_secs: u64,
}

fn default_in_flight() -> usize {
    16
}
fn default_retries() -> u32 {
    3
}
fn default_timeout_secs() -> u64 {
    600
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    client: reqwest::Client,
    in_flight: Semaphore,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    prompt: &'a str,
    n: u32,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprobs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    echo: Option<bool>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
    #[serde(default)]
    index: Option<usize>,
    #[serde(default)]
    logprobs: Option<WireLogprobs>,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireLogprobs {
    #[serde(default)]
    tokens: Vec<String>,
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    text_offset: Vec<usize>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable(format!("client build: {e}")))?;
        let in_flight = Semaphore::new(config.max_in_flight.max(1));
        Ok(Self {
            config,
            client,
            in_flight,
        })
    }

    async fn post(&self, body: &WireRequest<'_>) -> Result<WireResponse, BackendError> {
        let _permit = self
            .in_flight
            .acquire()
            .await
            .map_err(|_| BackendError::Unavailable("semaphore closed".into()))?;
        let url = format!("{}/completions", self.config.base_url.trim_end_matches('/'));
        let mut last_err = BackendError::Unavailable("no attempts made".into());
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                // 0.5s, 1s, 2s, ...
                let backoff = Duration::from_millis(500u64 << (attempt - 1));
                tokio::time::sleep(backoff).await;
            }
            let mut req = self.client.post(&url).json(body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            match req.send().await {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<WireResponse>()
                            .await
                            .map_err(|e| BackendError::Unavailable(format!("decode: {e}")));
                    }
                    if status.as_u16() == 429 {
                        let retry_after_secs = resp
                            .headers()
                            .get("retry-after")
                            .and_then(|v| v.to_str().ok())
                            .and_then(|v| v.parse().ok());
                        last_err = BackendError::RateLimited { retry_after_secs };
                    } else if status.is_server_error() {
                        last_err =
                            BackendError::Unavailable(format!("server status {status}"));
                    } else {
                        let text = resp.text().await.unwrap_or_default();
                        return Err(BackendError::InvalidRequest(format!(
                            "status {status}: {text}"
                        )));
                    }
                }
                Err(e) => last_err = BackendError::Unavailable(format!("transport: {e}")),
            }
        }
        Err(last_err)
    }
}

#[async_trait]
impl TextBackend for HttpBackend {
    async fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        request.validate()?;
        let body = WireRequest {
            model: self.config.model.as_deref(),
            prompt: &request.prompt,
            n: request.params.n,
            temperature: request.params.temperature,
            top_p: request.params.top_p,
            max_tokens: request.params.max_tokens,
            stop: request.stop.as_deref(),
            seed: request.params.seed,
            logprobs: request.logprobs.then_some(0),
            echo: None,
        };
        let wire = self.post(&body).await?;
        // Order by choice index, never by arrival order in the array.
        let mut choices = wire.choices;
        choices.sort_by_key(|c| c.index.unwrap_or(usize::MAX));
        if choices.len() != request.params.n as usize {
            return Err(BackendError::Unavailable(format!(
                "expected {} completions, got {}",
                request.params.n,
                choices.len()
            )));
        }
        let completions: Vec<Completion> = choices
            .into_iter()
            .map(|c| {
                let token_logprobs = c.logprobs.map(|lp| {
                    lp.tokens
                        .into_iter()
                        .zip(lp.token_logprobs)
                        .map(|(token, logprob)| TokenLogprob {
                            token,
                            logprob: logprob.unwrap_or(0.0),
                        })
                        .collect()
                });
                Completion {
                    text: c.text,
                    token_logprobs,
                    finish_reason: match c.finish_reason.as_deref() {
                        Some("length") => FinishReason::Length,
                        _ => FinishReason::Stop,
                    },
                }
            })
            .collect();
        let usage = wire
            .usage
            .map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            })
            .unwrap_or_default();
        let per_completion = if completions.is_empty() {
            0
        } else {
            usage.completion_tokens / completions.len() as u64
        };
        let completion_token_counts = completions
            .iter()
            .map(|c| {
                c.token_logprobs
                    .as_ref()
                    .map(|lp| lp.len() as u64)
                    .unwrap_or(per_completion)
            })
            .collect();
        Ok(GenerationResult {
            completions,
            usage,
            completion_token_counts,
        })
    }

    async fn count_tokens(&self, text: &str) -> Result<u64, BackendError> {
        if text.is_empty() {
            return Ok(0);
        }
        // No standard tokenize endpoint: issue a 1-token probe and read the
        // prompt token count from usage.
        let body = WireRequest {
            model: self.config.model.as_deref(),
            prompt: text,
            n: 1,
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 1,
            stop: None,
            seed: None,
            logprobs: None,
            echo: None,
        };
        let wire = self.post(&body).await?;
        wire.usage
            .map(|u| u.prompt_tokens)
            .ok_or_else(|| BackendError::Unavailable("endpoint reported no usage".into()))
    }

    async fn echo_logprobs(
        &self,
        context: &str,
        text: &str,
    ) -> Result<Vec<TokenLogprob>, BackendError> {
        let full = format!("{context}{text}");
        let body = WireRequest {
            model: self.config.model.as_deref(),
            prompt: &full,
            n: 1,
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 0,
            stop: None,
            seed: None,
            logprobs: Some(0),
            echo: Some(true),
        };
        let wire = self.post(&body).await?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::MissingLogprobs("no choices".into()))?;
        let lp = choice
            .logprobs
            .ok_or_else(|| BackendError::MissingLogprobs("no logprobs in response".into()))?;
        if lp.text_offset.len() != lp.tokens.len() {
            return Err(BackendError::MissingLogprobs(
                "text_offset not aligned with tokens".into(),
            ));
        }
        // Slice the response span: tokens whose offset falls at or after the
        // end of the context.
        let cut = context.len();
        let out: Vec<TokenLogprob> = lp
            .tokens
            .into_iter()
            .zip(lp.token_logprobs)
            .zip(lp.text_offset)
            .filter(|&(_, off)| off >= cut)
            .map(|((token, logprob), _)| TokenLogprob {
                token,
                logprob: logprob.unwrap_or(0.0),
            })
            .collect();
        if out.is_empty() {
            return Err(BackendError::MissingLogprobs(
                "no tokens in the response span".into(),
            ));
        }
        Ok(out)
    }
}
