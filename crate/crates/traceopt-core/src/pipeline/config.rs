//! Run configuration: backends, prompts, per-stage knobs, seeds.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{BackendError, HttpBackend, HttpBackendConfig, MockBackend, TextBackend};
use crate::finalize::FinalizeConfig;
use crate::metrics::EvaluationConfig;
use crate::probe::ExitConfig;
use crate::prompt::{DEFAULT_PROMPT, FAST_PROMPT};
use crate::prune::PruneConfig;
use crate::segment::{CueLexicon, Granularity};
use crate::simpo::SimpoConfig;
use crate::types::{DelimiterConfig, SamplingParams};

/// Where a backend's generations come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Http(HttpEndpointSpec),
    Mock { fixture: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpEndpointSpec {
    /// Base URL; when absent, read from the environment variable named in
    /// `base_url_env`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(default = "default_base_url_env")]
    pub base_url_env: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_base_url_env() -> String {
    "TRACEOPT_BASE_URL".to_string()
}
fn default_api_key_env() -> String {
    "TRACEOPT_API_KEY".to_string()
}
fn default_in_flight() -> usize {
    16
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Mock {
            fixture: PathBuf::from("fixture.jsonl"),
        }
    }
}

impl BackendSpec {
    pub fn build(&self) -> Result<Arc<dyn TextBackend>, BackendError> {
        match self {
            BackendSpec::Mock { fixture } => {
                Ok(Arc::new(MockBackend::from_jsonl_file(fixture)?))
            }
            BackendSpec::Http(spec) => {
                let base_url = match &spec.base_url {
                    Some(url) => url.clone(),
                    None => std::env::var(&spec.base_url_env).map_err(|_| {
                        BackendError::InvalidRequest(format!(
                            "no base_url and {} is unset",
                            spec.base_url_env
                        ))
                    })?,
                };
                let api_key = std::env::var(&spec.api_key_env).ok();
                Ok(Arc::new(HttpBackend::new(HttpBackendConfig {
                    base_url,
                    api_key,
                    model: spec.model.clone(),
                    max_in_flight: spec.max_in_flight,
                    max_retries: 3,
                    request_timeout_secs: 600,
                })?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    Default,
    Fast,
}

/// Field names of the input dataset JSONL rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFields {
    pub id: String,
    pub problem: String,
    pub answer: String,
}

impl Default for DatasetFields {
    fn default() -> Self {
        Self {
            id: "id".to_string(),
            problem: "problem".to_string(),
            answer: "answer".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub policy_backend: BackendSpec,
    pub judge_backend: BackendSpec,
    pub prompt_style: PromptStyle,
    /// Overrides the built-in prompt templates entirely when set.
    pub prompt_template: Option<String>,
    pub delimiters: DelimiterConfig,
    pub cues: Vec<String>,
    pub granularity: Granularity,
    pub exit: ExitConfig,
    pub finalize: FinalizeConfig,
    pub prune: PruneConfig,
    pub simpo: SimpoConfig,
    pub evaluation: EvaluationConfig,
    /// N: preference pairs to aim for per problem.
    pub pairs_per_problem: usize,
    pub samples_per_problem: usize,
    pub run_seed: u64,
    pub sampling: SamplingParams,
    pub dataset_fields: DatasetFields,
    /// Problems processed concurrently.
    pub concurrency: usize,
    /// Run fails (after writing artifacts) when the per-problem failure
    /// rate exceeds this bound.
    pub max_failure_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            policy_backend: BackendSpec::default(),
            judge_backend: BackendSpec::default(),
            prompt_style: PromptStyle::Default,
            prompt_template: None,
            delimiters: DelimiterConfig::default(),
            cues: CueLexicon::default().cues,
            granularity: Granularity::Paragraph,
            exit: ExitConfig::default(),
            finalize: FinalizeConfig::default(),
            prune: PruneConfig::default(),
            simpo: SimpoConfig::default(),
            evaluation: EvaluationConfig::default(),
            pairs_per_problem: 2,
            samples_per_problem: 4,
            run_seed: 0,
            sampling: SamplingParams::default(),
            dataset_fields: DatasetFields::default(),
            concurrency: 4,
            max_failure_rate: 1.0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let content = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError::Io(e.to_string()))?;
        let cfg: RunConfig =
            toml::from_str(&content).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples_per_problem < self.pairs_per_problem {
            return Err(ConfigError::Invalid(format!(
                "samples_per_problem ({}) must be >= pairs_per_problem ({})",
                self.samples_per_problem, self.pairs_per_problem
            )));
        }
        if self.pairs_per_problem == 0 {
            return Err(ConfigError::Invalid("pairs_per_problem must be >= 1".into()));
        }
        self.sampling
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.exit.threshold_t > 0.0 && self.exit.threshold_t <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "exit.threshold_t must be in (0, 1], got {}",
                self.exit.threshold_t
            )));
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Result<CueLexicon, ConfigError> {
        CueLexicon::new(self.cues.clone(), self.granularity)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// The active task prompt template.
    pub fn task_template(&self) -> &str {
        if let Some(t) = &self.prompt_template {
            return t;
        }
        match self.prompt_style {
            PromptStyle::Default => DEFAULT_PROMPT,
            PromptStyle::Fast => FAST_PROMPT,
        }
    }

    /// Hash of the canonical JSON serialization, recorded in the manifest.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_prefix(&hasher.finalize())
    }
}

pub(crate) fn hex_prefix(digest: &[u8]) -> String {
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(String),
    #[error("config parse: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.pairs_per_problem, 2);
        assert_eq!(cfg.samples_per_problem, 4);
        assert_eq!(cfg.exit.samples_m, 10);
        assert_eq!(cfg.finalize.samples_k, 4);
        assert_eq!(cfg.exit.threshold_t, 1.0);
    }

    #[test]
    fn partial_toml_sections_fall_back_to_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
run_seed = 7
samples_per_problem = 4
pairs_per_problem = 2

[policy_backend]
kind = "http"
base_url = "http://localhost:30000/v1"
model = "policy-model"

[judge_backend]
kind = "http"
base_url = "http://localhost:30001/v1"
model = "judge-model"

[exit]
samples_m = 10
threshold_t = 1.0

[finalize]
samples_k = 4

[simpo]
beta = 10.0
gamma = 3.0
"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        let defaults = RunConfig::default();
        assert_eq!(cfg.run_seed, 7);
        assert_eq!(cfg.exit.exit_pattern, defaults.exit.exit_pattern);
        assert_eq!(cfg.finalize.samples_k, 4);
        assert_eq!(
            cfg.finalize.finalize_pattern,
            defaults.finalize.finalize_pattern
        );
        match &cfg.policy_backend {
            BackendSpec::Http(spec) => {
                assert_eq!(spec.model.as_deref(), Some("policy-model"));
                assert_eq!(spec.base_url_env, "TRACEOPT_BASE_URL");
            }
            other => panic!("expected http backend, got {other:?}"),
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.config_hash(), back.config_hash());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg: RunConfig = toml::from_str("run_seed = 7\npairs_per_problem = 1\n").unwrap();
        assert_eq!(cfg.run_seed, 7);
        assert_eq!(cfg.pairs_per_problem, 1);
        assert_eq!(cfg.samples_per_problem, 4);
    }

    #[test]
    fn invalid_n_rejected() {
        let cfg = RunConfig {
            pairs_per_problem: 5,
            samples_per_problem: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        b.run_seed = 99;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
