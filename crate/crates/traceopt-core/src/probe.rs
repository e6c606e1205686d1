//! Exit-point probing: find the earliest segment index at which forcing an
//! immediate answer already yields the ground truth.
//!
//! Each prefix gets the exit pattern appended; the policy model samples M
//! short completions and the hit fraction is the correctness estimate for
//! that index. The scan is sequential with a break at the first index whose
//! estimate reaches the threshold; an optional speculative window probes a
//! few indices concurrently while preserving the sequential decision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{answer_matches, AnswerMatchPolicy};
use crate::backend::{BackendError, Completion, GenerationRequest, TextBackend};
use crate::types::{Problem, SamplingParams, ThinkingPattern, Trajectory, TypeError};

pub const DEFAULT_EXIT_PATTERN: &str =
    "... Wait, I suddenly got the final answer to the whole problem. Final Answer: \\boxed{";

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("segment index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExitConfig {
    pub exit_pattern: String,
    pub samples_m: u32,
    pub threshold_t: f64,
    pub answer_margin_tokens: u32,
    pub match_policy: AnswerMatchPolicy,
    /// Width of the speculative probe window; 1 means strictly sequential.
    pub speculative_window: usize,
}

impl Default for ExitConfig {
    fn default() -> Self {
        Self {
            exit_pattern: DEFAULT_EXIT_PATTERN.to_string(),
            samples_m: 10,
            threshold_t: 1.0,
            answer_margin_tokens: 16,
            match_policy: AnswerMatchPolicy::containment(),
            speculative_window: 1,
        }
    }
}

/// Per-index Monte Carlo probe outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub index: usize,
    pub hits: u32,
    pub samples_m: u32,
    #[serde(skip_serializing, default)]
    pub completions: Vec<Completion>,
}

impl ProbeResult {
    /// Exact ratio hits / M; never accumulated in floating point.
    pub fn p(&self) -> f64 {
        self.hits as f64 / self.samples_m as f64
    }

    pub fn qualifies(&self, threshold: f64) -> bool {
        self.p() >= threshold
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationDecision {
    pub i_prime: usize,
    /// True iff some evaluated p_i reached the threshold.
    pub qualified: bool,
    pub probes: Vec<ProbeResult>,
}

impl TruncationDecision {
    /// Maximum estimated correctness probability across evaluated indices.
    pub fn max_p(&self) -> Option<f64> {
        self.probes
            .iter()
            .map(ProbeResult::p)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.max(p))))
    }
}

/// δ_1 ⊕ … ⊕ δ_i ⊕ exit_pattern, verbatim concatenation.
pub fn build_partial(
    trajectory: &Trajectory,
    i: usize,
    exit_pattern: &str,
) -> Result<String, ProbeError> {
    if i == 0 || i > trajectory.len() {
        return Err(ProbeError::IndexOutOfRange {
            index: i,
            len: trajectory.len(),
        });
    }
    let mut out = trajectory.prefix_text(i);
    out.push_str(exit_pattern);
    Ok(out)
}

/// Derives a per-index sampling seed when the base params carry one.
fn probe_seed(base: Option<u64>, index: usize) -> Option<u64> {
    base.map(|s| s.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(index as u64))
}

/// Probes one truncation index: M short samples, hits counted under the
/// configured match policy.
pub async fn probe_index(
    prompt_prefix: &str,
    trajectory: &Trajectory,
    i: usize,
    cfg: &ExitConfig,
    params: &SamplingParams,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<ProbeResult, ProbeError> {
    let partial = build_partial(trajectory, i, &cfg.exit_pattern)?;
    let answer_tokens = backend.count_tokens(&problem.ground_truth).await?;
    let max_tokens = answer_tokens as u32 + cfg.answer_margin_tokens;
    let request = GenerationRequest::new(
        format!("{prompt_prefix}{partial}"),
        params
            .clone()
            .with_n(cfg.samples_m)
            .with_max_tokens(max_tokens)
            .with_seed(probe_seed(params.seed, i)),
    );
    let result = backend.generate(&request).await?;
    let hits = result
        .completions
        .iter()
        .filter(|c| answer_matches(&c.text, &problem.ground_truth, &cfg.match_policy))
        .count() as u32;
    Ok(ProbeResult {
        index: i,
        hits,
        samples_m: cfg.samples_m,
        completions: result.completions,
    })
}

/// Sequential scan with break at the first index whose p_i reaches the
/// threshold. When no index qualifies, i' is the trajectory length.
pub async fn find_truncation(
    prompt_prefix: &str,
    trajectory: &Trajectory,
    cfg: &ExitConfig,
    params: &SamplingParams,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<TruncationDecision, ProbeError> {
    let n = trajectory.len();
    let window = cfg.speculative_window.max(1);
    let mut probes: Vec<ProbeResult> = Vec::new();
    let mut next = 1usize;
    while next <= n {
        let hi = (next + window - 1).min(n);
        let batch = futures::future::try_join_all((next..=hi).map(|i| {
            probe_index(prompt_prefix, trajectory, i, cfg, params, problem, backend)
        }))
        .await?;
        for probe in batch {
            let qualifies = probe.qualifies(cfg.threshold_t);
            let index = probe.index;
            probes.push(probe);
            if qualifies {
                // Earliest qualifying index among evaluated ones; identical
                // to the pure sequential scan's decision.
                return Ok(TruncationDecision {
                    i_prime: index,
                    qualified: true,
                    probes,
                });
            }
        }
        next = hi + 1;
    }
    Ok(TruncationDecision {
        i_prime: n,
        qualified: false,
        probes,
    })
}

/// Probes forward from `from` (inclusive) for the next qualifying index,
/// appending the new probes to `decision`.
pub async fn advance_truncation(
    prompt_prefix: &str,
    trajectory: &Trajectory,
    decision: &mut TruncationDecision,
    from: usize,
    cfg: &ExitConfig,
    params: &SamplingParams,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<Option<usize>, ProbeError> {
    for i in from..=trajectory.len() {
        if let Some(existing) = decision.probes.iter().find(|p| p.index == i) {
            if existing.qualifies(cfg.threshold_t) {
                return Ok(Some(i));
            }
            continue;
        }
        let probe = probe_index(prompt_prefix, trajectory, i, cfg, params, problem, backend).await?;
        let qualifies = probe.qualifies(cfg.threshold_t);
        decision.probes.push(probe);
        if qualifies {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Δ_x^f: the prefix of segments up to and including i'.
pub fn truncate(trajectory: &Trajectory, decision: &TruncationDecision) -> Result<Trajectory, ProbeError> {
    let i = decision.i_prime;
    if i == 0 || i > trajectory.len() {
        return Err(ProbeError::IndexOutOfRange {
            index: i,
            len: trajectory.len(),
        });
    }
    let segments: Vec<ThinkingPattern> = trajectory.segments[..i].to_vec();
    Ok(Trajectory::from_segments(segments)?)
}

/// One row of the probe audit log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeAuditRow {
    pub problem_id: String,
    pub index: usize,
    pub p: f64,
    pub hits: u32,
    #[serde(rename = "M")]
    pub samples_m: u32,
    pub qualified: bool,
}

pub fn audit_rows(problem_id: &str, decision: &TruncationDecision, threshold: f64) -> Vec<ProbeAuditRow> {
    decision
        .probes
        .iter()
        .map(|p| ProbeAuditRow {
            problem_id: problem_id.to_string(),
            index: p.index,
            p: p.p(),
            hits: p.hits,
            samples_m: p.samples_m,
            qualified: p.qualifies(threshold),
        })
        .collect()
}
