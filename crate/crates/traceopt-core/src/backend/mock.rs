//! Deterministic scripted backend for tests and offline pipeline runs.
//!
//! Rules are matched in order against the request prompt (literal substring,
//! suffix matches included); each rule cycles through its canned responses.
//! Tokens are whitespace-separated words, and echo logprobs are a fixed
//! function of token length, so every result is reproducible byte-for-byte.

use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{
    BackendError, Completion, FinishReason, GenerationRequest, GenerationResult, TextBackend,
    TokenLogprob, Usage,
};

/// One scripted rule: a prompt pattern plus a cyclic list of responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureRule {
    /// Literal pattern; the rule matches when the prompt ends with or
    /// contains it.
    #[serde(rename = "match")]
    pub pattern: String,
    pub responses: Vec<String>,
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Per-token logprob assigned in echo scoring for text matched by this
    /// backend; mock-global, kept here for fixture-file completeness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprob: Option<f64>,
}

fn default_mode() -> String {
    "cycle".to_string()
}

pub struct MockBackend {
    rules: Vec<FixtureRule>,
    cursors: Mutex<Vec<usize>>,
}

impl MockBackend {
    pub fn new(rules: Vec<FixtureRule>) -> Result<Self, BackendError> {
        for rule in &rules {
            if rule.responses.is_empty() {
                return Err(BackendError::InvalidRequest(format!(
                    "fixture rule {:?} has no responses",
                    rule.pattern
                )));
            }
            if rule.mode != "cycle" {
                return Err(BackendError::InvalidRequest(format!(
                    "unsupported fixture mode {:?}",
                    rule.mode
                )));
            }
        }
        let cursors = Mutex::new(vec![0; rules.len()]);
        Ok(Self { rules, cursors })
    }

    /// Loads a JSONL fixture file, one rule per line.
    pub fn from_jsonl_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let content = std::fs::read_to_string(path.as_ref())
            .map_err(|e| BackendError::Unavailable(format!("fixture read: {e}")))?;
        Self::from_jsonl(&content)
    }

    pub fn from_jsonl(content: &str) -> Result<Self, BackendError> {
        let mut rules = Vec::new();
        for (lineno, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rule: FixtureRule = serde_json::from_str(line).map_err(|e| {
                BackendError::InvalidRequest(format!("fixture line {}: {e}", lineno + 1))
            })?;
            rules.push(rule);
        }
        Self::new(rules)
    }

    fn find_rule(&self, prompt: &str) -> Option<usize> {
        self.rules
            .iter()
            .position(|r| prompt.ends_with(&r.pattern) || prompt.contains(&r.pattern))
    }

    /// Mock token rule: whitespace-separated words.
    pub fn word_count(text: &str) -> u64 {
        text.split_whitespace().count() as u64
    }

    fn shape_completion(text: &str, req: &GenerationRequest) -> Completion {
        let mut text = text.to_string();
        let mut finish = FinishReason::Stop;
        if let Some(stops) = &req.stop {
            if let Some(cut) = stops.iter().filter_map(|s| text.find(s.as_str())).min() {
                text.truncate(cut);
            }
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.len() as u64 > req.params.max_tokens as u64 {
            text = words[..req.params.max_tokens as usize].join(" ");
            finish = FinishReason::Length;
        }
        let token_logprobs = req.logprobs.then(|| Self::token_logprobs_for(&text));
        Completion {
            text,
            token_logprobs,
            finish_reason: finish,
        }
    }

    /// Deterministic per-token logprob: -0.1 per character of the token.
    pub fn token_logprobs_for(text: &str) -> Vec<TokenLogprob> {
        text.split_whitespace()
            .map(|w| TokenLogprob {
                token: w.to_string(),
                logprob: -0.1 * w.chars().count() as f64,
            })
            .collect()
    }
}

#[async_trait]
impl TextBackend for MockBackend {
    async fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        request.validate()?;
        let idx = self.find_rule(&request.prompt).ok_or_else(|| {
            let tail: String = request
                .prompt
                .chars()
                .rev()
                .take(80)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            BackendError::FixtureMiss { prompt_tail: tail }
        })?;
        let rule = &self.rules[idx];
        let n = request.params.n as usize;
        let start = {
            let mut cursors = self.cursors.lock().expect("cursor lock");
            let s = cursors[idx];
            cursors[idx] = (s + n) % rule.responses.len();
            s
        };
        let completions: Vec<Completion> = (0..n)
            .map(|k| {
                let text = &rule.responses[(start + k) % rule.responses.len()];
                Self::shape_completion(text, request)
            })
            .collect();
        let completion_token_counts: Vec<u64> =
            completions.iter().map(|c| Self::word_count(&c.text)).collect();
        let usage = Usage {
            prompt_tokens: Self::word_count(&request.prompt),
            completion_tokens: completion_token_counts.iter().sum(),
        };
        Ok(GenerationResult {
            completions,
            usage,
            completion_token_counts,
        })
    }

    async fn count_tokens(&self, text: &str) -> Result<u64, BackendError> {
        Ok(Self::word_count(text))
    }

    async fn echo_logprobs(
        &self,
        _context: &str,
        text: &str,
    ) -> Result<Vec<TokenLogprob>, BackendError> {
        if text.split_whitespace().next().is_none() {
            return Err(BackendError::MissingLogprobs("empty text".into()));
        }
        Ok(Self::token_logprobs_for(text))
    }
}
