//! Preference-pair dataset construction.
//!
//! Per problem: pick the N shortest correct sampled responses (topping up
//! with seeded-random incorrect ones when fewer than N are correct), run
//! each through trajectory optimization, and pair every correct optimized
//! text against the single longest raw sampled response.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::answer::{answer_matches, AnswerMatchPolicy};
use crate::prune::OptimizedTrajectory;
use crate::types::Problem;

#[derive(Debug, Error, PartialEq)]
pub enum PairError {
    #[error("need {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

/// One raw sampled response with its correctness label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledResponse {
    pub problem_id: String,
    pub text: String,
    pub correct: bool,
    pub token_count: u64,
    /// 1-based sample ordinal.
    pub sample_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    FromCorrect,
    FromIncorrect,
}

/// A (chosen, rejected) record of the pairwise dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub problem_id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub chosen_tokens: u64,
    pub rejected_tokens: u64,
    pub source: PairSource,
}

/// Why candidate pairs were dropped instead of emitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropStats {
    pub optimization_failed: u64,
    pub chosen_incorrect: u64,
    pub degenerate: u64,
}

impl DropStats {
    pub fn total(&self) -> u64 {
        self.optimization_failed + self.chosen_incorrect + self.degenerate
    }
}

/// Stable per-problem RNG seed derived from the run seed and the problem id.
pub fn problem_seed(run_seed: u64, problem_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(run_seed.to_le_bytes());
    hasher.update(problem_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Selects the responses to optimize: the N shortest correct ones, or all
/// correct plus seeded-random incorrect ones when fewer than N are correct.
pub fn select_optimization_targets(
    samples: &[SampledResponse],
    n: usize,
    seed: u64,
) -> Result<Vec<SampledResponse>, PairError> {
    if samples.len() < n {
        return Err(PairError::InsufficientSamples {
            needed: n,
            got: samples.len(),
        });
    }
    let mut correct: Vec<&SampledResponse> = samples.iter().filter(|s| s.correct).collect();
    // Shortest first; ties by sample order.
    correct.sort_by_key(|s| (s.token_count, s.sample_index));
    if correct.len() >= n {
        return Ok(correct[..n].iter().map(|s| (*s).clone()).collect());
    }
    let mut picked: Vec<SampledResponse> = correct.iter().map(|s| (*s).clone()).collect();
    let mut incorrect: Vec<&SampledResponse> = samples.iter().filter(|s| !s.correct).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    incorrect.shuffle(&mut rng);
    for s in incorrect.into_iter().take(n - picked.len()) {
        picked.push(s.clone());
    }
    picked.sort_by_key(|s| s.sample_index);
    Ok(picked)
}

/// Builds the problem's preference pairs from its optimized trajectories.
///
/// The rejected side is always the single longest raw sample (shared across
/// the problem's pairs). Targets whose optimization failed or whose
/// optimized text is not correct are dropped and counted, never raised.
pub fn build_pairs(
    problem: &Problem,
    prompt: &str,
    samples: &[SampledResponse],
    optimized: &[(SampledResponse, Option<OptimizedTrajectory>)],
    policy: &AnswerMatchPolicy,
) -> (Vec<PreferencePair>, DropStats) {
    let mut drops = DropStats::default();
    let Some(longest) = samples
        .iter()
        .max_by(|a, b| {
            (a.token_count, std::cmp::Reverse(a.sample_index))
                .cmp(&(b.token_count, std::cmp::Reverse(b.sample_index)))
        })
    else {
        return (Vec::new(), drops);
    };
    let mut pairs = Vec::new();
    for (target, opt) in optimized {
        let Some(opt) = opt else {
            drops.optimization_failed += 1;
            continue;
        };
        // Re-check correctness at emission.
        if !answer_matches(&opt.text, &problem.ground_truth, policy) {
            drops.chosen_incorrect += 1;
            continue;
        }
        if opt.text == longest.text {
            drops.degenerate += 1;
            continue;
        }
        pairs.push(PreferencePair {
            problem_id: problem.id.clone(),
            prompt: prompt.to_string(),
            chosen: opt.text.clone(),
            rejected: longest.text.clone(),
            chosen_tokens: opt.token_count,
            rejected_tokens: longest.token_count,
            source: if target.correct {
                PairSource::FromCorrect
            } else {
                PairSource::FromIncorrect
            },
        });
    }
    (pairs, drops)
}
