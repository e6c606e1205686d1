//! Finalize sampling: append the finalize pattern to the truncated
//! trajectory, sample K closers, and splice in the shortest correct one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{answer_matches, AnswerMatchPolicy};
use crate::backend::{BackendError, Completion, GenerationRequest, TextBackend};
use crate::types::{Problem, SamplingParams, Trajectory};

pub const DEFAULT_FINALIZE_PATTERN: &str =
    "Hmm, I think this is enough to derive the final answer.";

#[derive(Debug, Error)]
pub enum FinalizeError {
    #[error("no sampled closer was correct")]
    NoCorrectCompletion,
    #[error("truncated trajectory is empty")]
    EmptyTrajectory,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinalizeConfig {
    pub finalize_pattern: String,
    pub samples_k: u32,
    pub completion_params: SamplingParams,
    /// Separator spliced before the finalize pattern; pinned in config so
    /// golden files stay stable.
    pub separator: String,
}

impl Default for FinalizeConfig {
    fn default() -> Self {
        Self {
            finalize_pattern: DEFAULT_FINALIZE_PATTERN.to_string(),
            samples_k: 4,
            completion_params: SamplingParams {
                max_tokens: 1024,
                ..Default::default()
            },
            separator: " ".to_string(),
        }
    }
}

/// The truncated trajectory with the finalize pattern and the selected
/// shortest correct closer spliced on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalizedTrajectory {
    pub kept_segments: Trajectory,
    pub separator: String,
    pub finalize_pattern: String,
    /// s*, the selected closer.
    pub closer: Completion,
    pub closer_tokens: u64,
    pub composed_text: String,
}

impl FinalizedTrajectory {
    /// Deliberation text up to the finalize pattern, without the closer.
    pub fn pre_closer_text(&self) -> String {
        format!(
            "{}{}{}",
            self.kept_segments.think_text(),
            self.separator,
            self.finalize_pattern
        )
    }
}

/// Samples K closers after the finalize pattern and keeps the shortest
/// correct one (ties broken by sample order).
pub async fn finalize(
    prompt_prefix: &str,
    truncated: &Trajectory,
    cfg: &FinalizeConfig,
    policy: &AnswerMatchPolicy,
    problem: &Problem,
    backend: &dyn TextBackend,
) -> Result<FinalizedTrajectory, FinalizeError> {
    if truncated.is_empty() {
        return Err(FinalizeError::EmptyTrajectory);
    }
    let kept_text = truncated.think_text();
    let prompt = format!(
        "{prompt_prefix}{kept_text}{}{}",
        cfg.separator, cfg.finalize_pattern
    );
    let request = GenerationRequest::new(
        prompt,
        cfg.completion_params.clone().with_n(cfg.samples_k),
    );
    let result = backend.generate(&request).await?;

    let mut best: Option<(usize, u64)> = None;
    for (i, completion) in result.completions.iter().enumerate() {
        if !answer_matches(&completion.text, &problem.ground_truth, policy) {
            continue;
        }
        let tokens = result.completion_token_counts[i];
        // Strictly-less keeps the first sampled closer on ties.
        if best.map_or(true, |(_, t)| tokens < t) {
            best = Some((i, tokens));
        }
    }
    let (idx, closer_tokens) = best.ok_or(FinalizeError::NoCorrectCompletion)?;
    let closer = result.completions[idx].clone();
    let composed_text = format!(
        "{kept_text}{}{}{}",
        cfg.separator, cfg.finalize_pattern, closer.text
    );
    Ok(FinalizedTrajectory {
        kept_segments: truncated.clone(),
        separator: cfg.separator.clone(),
        finalize_pattern: cfg.finalize_pattern.clone(),
        closer,
        closer_tokens,
        composed_text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FixtureRule, MockBackend};
    use crate::types::ThinkingPattern;

    fn traj(text: &str) -> Trajectory {
        Trajectory::from_segments(vec![ThinkingPattern {
            index: 1,
            text: text.to_string(),
            cue: None,
        }])
        .unwrap()
    }

    fn rule(pattern: &str, responses: &[&str]) -> FixtureRule {
        FixtureRule {
            pattern: pattern.to_string(),
            responses: responses.iter().map(|s| s.to_string()).collect(),
            mode: "cycle".to_string(),
            token_logprob: None,
        }
    }

    fn cfg() -> FinalizeConfig {
        FinalizeConfig {
            samples_k: 4,
            ..Default::default()
        }
    }

    #[tokio::test]
    async fn shortest_correct_closer_wins() {
        // Correct closers have 4 and 7 words; incorrect ones are shorter.
        let responses = [
            " nope 46",
            " so the answer is 45",
            " wrong",
            " therefore after careful checking the answer is 45",
        ];
        let mock = MockBackend::new(vec![rule(DEFAULT_FINALIZE_PATTERN, &responses)]).unwrap();
        let problem = Problem::new("p1", "q", "45").unwrap();
        let out = finalize(
            "PROMPT ",
            &traj("thinking"),
            &cfg(),
            &AnswerMatchPolicy::containment(),
            &problem,
            &mock,
        )
        .await
        .unwrap();
        assert_eq!(out.closer.text, " so the answer is 45");
        assert_eq!(out.closer_tokens, 5);
        assert_eq!(
            out.composed_text,
            format!("thinking {DEFAULT_FINALIZE_PATTERN} so the answer is 45")
        );
    }

    #[tokio::test]
    async fn all_incorrect_is_no_correct_completion() {
        let mock = MockBackend::new(vec![rule(
            DEFAULT_FINALIZE_PATTERN,
            &[" 46", " 47", " 48", " 49"],
        )])
        .unwrap();
        let problem = Problem::new("p1", "q", "45").unwrap();
        let err = finalize(
            "PROMPT ",
            &traj("thinking"),
            &cfg(),
            &AnswerMatchPolicy::containment(),
            &problem,
            &mock,
        )
        .await
        .unwrap_err();
        assert!(matches!(err, FinalizeError::NoCorrectCompletion));
    }

    #[tokio::test]
    async fn equal_length_tie_goes_to_first_sample() {
        // Two correct closers with identical token counts; the mock replays
        // deterministically, so the tie rule is observable.
        let responses = [" answer 45 first", " answer 45 later", " x", " y"];
        let mock = MockBackend::new(vec![rule(DEFAULT_FINALIZE_PATTERN, &responses)]).unwrap();
        let problem = Problem::new("p1", "q", "45").unwrap();
        let out = finalize(
            "PROMPT ",
            &traj("thinking"),
            &cfg(),
            &AnswerMatchPolicy::containment(),
            &problem,
            &mock,
        )
        .await
        .unwrap();
        assert_eq!(out.closer.text, " answer 45 first");
    }

    #[tokio::test]
    async fn composed_token_count_is_additive_on_mock() {
        let responses = [" the answer is 45"];
        let mock = MockBackend::new(vec![rule(DEFAULT_FINALIZE_PATTERN, &responses)]).unwrap();
        let problem = Problem::new("p1", "q", "45").unwrap();
        let kept = traj("two words");
        let out = finalize(
            "PROMPT ",
            &kept,
            &cfg(),
            &AnswerMatchPolicy::containment(),
            &problem,
            &mock,
        )
        .await
        .unwrap();
        let composed = mock.count_tokens(&out.composed_text).await.unwrap();
        let parts = mock.count_tokens(kept.think_text()).await.unwrap()
            + mock.count_tokens(DEFAULT_FINALIZE_PATTERN).await.unwrap()
            + mock.count_tokens(&out.closer.text).await.unwrap();
        assert_eq!(composed, parts);
    }
}
