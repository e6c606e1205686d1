//! Judge-validated pruning of intermediate thinking patterns.
//!
//! The judge model issues per-chunk KEEP/REMOVE verdicts; each REMOVE is
//! validated by a leave-one-out quick decode that must still reach the
//! ground truth. A final end-to-end decode guards against joint-removal
//! effects: if it fails, removed segments are greedily re-added in original
//! order until it passes. Only the per-chunk verdicts are used; the judge's
//! reconstructed reasoning is ignored and the output is composed locally
//! from verbatim segments.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{answer_matches, AnswerMatchPolicy};
use crate::backend::{BackendError, GenerationRequest, TextBackend};
use crate::finalize::FinalizedTrajectory;
use crate::prompt::JUDGE_PROMPT;
use crate::types::{Problem, SamplingParams};

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("judge response missing verdict for chunk {0}")]
    MissingVerdict(usize),
    #[error("judge response contains no parsable verdicts")]
    NoVerdicts,
    #[error("no segments to judge")]
    NoSegments,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Keep,
    Remove,
}

/// Per-chunk judge verdicts aligned to segment indices, with the raw
/// response retained for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeVerdicts {
    pub per_chunk: Vec<Verdict>,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    pub margin_tokens: u32,
    /// Validate every REMOVE with a leave-one-out decode.
    pub validate_each: bool,
    /// Never remove the first segment, on top of the always-protected
    /// finalize pattern and closer.
    pub protect_first_segment: bool,
    pub judge_max_tokens: u32,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            margin_tokens: 16,
            validate_each: true,
            protect_first_segment: false,
            judge_max_tokens: 4096,
        }
    }
}

/// The final optimized trajectory with full provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizedTrajectory {
    pub problem_id: String,
    /// Composed text: kept segments, finalize pattern, closer.
    pub text: String,
    pub removed_indices: Vec<usize>,
    pub kept_indices: Vec<usize>,
    pub i_prime: usize,
    pub provenance: Provenance,
    pub token_count: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub max_p: Option<f64>,
    pub probes_evaluated: usize,
    pub judge_parse_failed: bool,
    pub rollback_readded: Vec<usize>,
    pub source_token_count: u64,
}

/// One row of the prune audit log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneAuditRow {
    pub problem_id: String,
    pub chunk: usize,
    pub verdict: String,
    pub validated: Option<bool>,
    pub removed: bool,
}

/// Instantiates the judge prompt with the problem, the ground truth, and the
/// kept segments as numbered chunks (finalize pattern and closer excluded).
pub fn render_judge_prompt(
    problem: &Problem,
    finalized: &FinalizedTrajectory,
) -> Result<String, PruneError> {
    render_judge_prompt_with(JUDGE_PROMPT, problem, finalized)
}

pub fn render_judge_prompt_with(
    template: &str,
    problem: &Problem,
    finalized: &FinalizedTrajectory,
) -> Result<String, PruneError> {
    let segments = &finalized.kept_segments.segments;
    if segments.is_empty() {
        return Err(PruneError::NoSegments);
    }
    let chunks: String = segments
        .iter()
        .map(|s| format!("[Chunk {}]\n{}\n", s.index, s.text.trim_end()))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(template
        .replace("{problem}", &problem.statement)
        .replace("{ground_truth_answer}", &problem.ground_truth)
        .replace("{thinking_patterns}", &chunks))
}

static VERDICT_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\[Chunk (\d+)\]\s*(KEEP AS IS|REMOVE)").expect("valid regex"));

/// Extracts one verdict per chunk 1..=expected_n. Order-insensitive;
/// duplicates resolved by last occurrence; any missing chunk is an error.
pub fn parse_verdicts(judge_response: &str, expected_n: usize) -> Result<JudgeVerdicts, PruneError> {
    let mut slots: Vec<Option<Verdict>> = vec![None; expected_n];
    let mut any = false;
    for cap in VERDICT_LINE.captures_iter(judge_response) {
        any = true;
        let idx: usize = cap[1].parse().unwrap_or(0);
        if idx == 0 || idx > expected_n {
            continue;
        }
        let verdict = if &cap[2] == "REMOVE" {
            Verdict::Remove
        } else {
            Verdict::Keep
        };
        slots[idx - 1] = Some(verdict);
    }
    if !any {
        return Err(PruneError::NoVerdicts);
    }
    let mut per_chunk = Vec::with_capacity(expected_n);
    for (i, slot) in slots.into_iter().enumerate() {
        per_chunk.push(slot.ok_or(PruneError::MissingVerdict(i + 1))?);
    }
    Ok(JudgeVerdicts {
        per_chunk,
        raw_response: judge_response.to_string(),
    })
}

/// Deliberation text with the segments in `removed` dropped, truncated just
/// before the closer's `\boxed` occurrence (or the full closer when absent).
fn leave_out_text(finalized: &FinalizedTrajectory, removed: &[usize]) -> String {
    let kept: String = finalized
        .kept_segments
        .segments
        .iter()
        .filter(|s| !removed.contains(&s.index))
        .map(|s| s.text.as_str())
        .collect();
    let closer = &finalized.closer.text;
    let closer_head = match closer.find("\\boxed") {
        Some(pos) => &closer[..pos],
        None => closer.as_str(),
    };
    format!(
        "{kept}{}{}{closer_head}",
        finalized.separator, finalized.finalize_pattern
    )
}

/// Quick decode from `text` and check that the ground truth appears.
async fn quick_decode_ok(
    prompt_prefix: &str,
    text: &str,
    cfg: &PruneConfig,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<bool, PruneError> {
    let answer_tokens = backend.count_tokens(&problem.ground_truth).await?;
    let params = SamplingParams {
        temperature: 0.0,
        top_p: 1.0,
        max_tokens: answer_tokens as u32 + cfg.margin_tokens,
        n: 1,
        seed: None,
    };
    let request = GenerationRequest::new(format!("{prompt_prefix}{text}"), params);
    let result = backend.generate(&request).await?;
    let policy = AnswerMatchPolicy::containment();
    Ok(answer_matches(
        &result.completions[0].text,
        &problem.ground_truth,
        &policy,
    ))
}

/// Leave-one-out validation for removing segment `i`.
pub async fn validate_removal(
    prompt_prefix: &str,
    finalized: &FinalizedTrajectory,
    i: usize,
    cfg: &PruneConfig,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<bool, PruneError> {
    let text = leave_out_text(finalized, &[i]);
    quick_decode_ok(prompt_prefix, &text, cfg, problem, backend).await
}

fn compose(finalized: &FinalizedTrajectory, removed: &[usize]) -> String {
    let kept: String = finalized
        .kept_segments
        .segments
        .iter()
        .filter(|s| !removed.contains(&s.index))
        .map(|s| s.text.as_str())
        .collect();
    format!(
        "{kept}{}{}{}",
        finalized.separator, finalized.finalize_pattern, finalized.closer.text
    )
}

pub struct PruneOutcome {
    pub optimized: OptimizedTrajectory,
    pub audit: Vec<PruneAuditRow>,
}

/// Full pruning step: judge verdicts, per-removal validation, composition,
/// end-to-end check with greedy rollback.
#[allow(clippy::too_many_arguments)]
pub async fn prune(
    prompt_prefix: &str,
    finalized: &FinalizedTrajectory,
    judge_backend: &dyn TextBackend,
    policy_backend: &dyn TextBackend,
    cfg: &PruneConfig,
    problem: &Problem,
    i_prime: usize,
) -> Result<PruneOutcome, PruneError> {
    let n = finalized.kept_segments.len();
    let judge_prompt = render_judge_prompt(problem, finalized)?;
    let judge_params = SamplingParams {
        temperature: 0.0,
        top_p: 1.0,
        max_tokens: cfg.judge_max_tokens,
        n: 1,
        seed: None,
    };
    let judge_result = judge_backend
        .generate(&GenerationRequest::new(judge_prompt, judge_params))
        .await?;
    let raw = &judge_result.completions[0].text;

    // Fail-safe: an unparsable judge response prunes nothing.
    let (verdicts, judge_parse_failed) = match parse_verdicts(raw, n) {
        Ok(v) => (v, false),
        Err(_) => (
            JudgeVerdicts {
                per_chunk: vec![Verdict::Keep; n],
                raw_response: raw.clone(),
            },
            true,
        ),
    };

    let mut audit = Vec::with_capacity(n);
    let mut removed: Vec<usize> = Vec::new();
    for (chunk0, verdict) in verdicts.per_chunk.iter().enumerate() {
        let index = chunk0 + 1;
        let protected = cfg.protect_first_segment && index == 1;
        let mut validated = None;
        let mut remove = false;
        if *verdict == Verdict::Remove && !protected {
            if cfg.validate_each {
                let ok =
                    validate_removal(prompt_prefix, finalized, index, cfg, problem, policy_backend)
                        .await?;
                validated = Some(ok);
                remove = ok;
            } else {
                remove = true;
            }
        }
        if remove {
            removed.push(index);
        }
        audit.push(PruneAuditRow {
            problem_id: problem.id.clone(),
            chunk: index,
            verdict: match verdict {
                Verdict::Keep => "KEEP".to_string(),
                Verdict::Remove => "REMOVE".to_string(),
            },
            validated,
            removed: remove,
        });
    }

    // End-to-end check of the jointly pruned trajectory; greedily re-add
    // removed segments in original order until the decode recovers.
    let mut readded: Vec<usize> = Vec::new();
    loop {
        let candidate = leave_out_text(finalized, &removed);
        if removed.is_empty()
            || quick_decode_ok(prompt_prefix, &candidate, cfg, problem, policy_backend).await?
        {
            break;
        }
        let back = removed.remove(0);
        readded.push(back);
        if let Some(row) = audit.iter_mut().find(|r| r.chunk == back) {
            row.removed = false;
        }
    }

    let text = compose(finalized, &removed);
    let token_count = policy_backend.count_tokens(&text).await?;
    let kept_indices: Vec<usize> = (1..=n).filter(|i| !removed.contains(i)).collect();
    Ok(PruneOutcome {
        optimized: OptimizedTrajectory {
            problem_id: problem.id.clone(),
            text,
            removed_indices: removed,
            kept_indices,
            i_prime,
            provenance: Provenance {
                judge_parse_failed,
                rollback_readded: readded,
                ..Default::default()
            },
            token_count,
        },
        audit,
    })
}
