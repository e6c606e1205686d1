//! Cost and performance accounting: token counts, an attention-FLOPs proxy,
//! accuracy, the efficiency ratio eta, cue counts, and the
//! performance-floor constraint check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{answer_matches, AnswerMatchPolicy};
use crate::segment::count_cue;
use crate::types::Problem;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("denominator must be positive: {0}")]
    DivisionDomain(String),
    #[error("responses not aligned to problems: {0}")]
    Alignment(String),
}

/// Cost unit for trajectory accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostUnit {
    #[default]
    Tokens,
    AttnFlops,
}

/// Relative causal-attention cost of generating a sequence of `length`
/// tokens: L(L+1)/2. Constants cancel in ratios.
pub fn attn_flops(length_tokens: u64) -> f64 {
    let l = length_tokens as f64;
    l * (l + 1.0) / 2.0
}

/// Additive trajectory cost in the chosen unit.
pub fn trajectory_cost(unit: CostUnit, segment_token_counts: &[u64]) -> f64 {
    match unit {
        CostUnit::Tokens => segment_token_counts.iter().sum::<u64>() as f64,
        CostUnit::AttnFlops => attn_flops(segment_token_counts.iter().sum()),
    }
}

/// eta = (acc_method / acc_base) * (cost_base / cost_method).
pub fn efficiency_eta(
    acc_method: f64,
    acc_base: f64,
    cost_method: f64,
    cost_base: f64,
) -> Result<f64, MetricsError> {
    if acc_base <= 0.0 {
        return Err(MetricsError::DivisionDomain(format!("acc_base = {acc_base}")));
    }
    if cost_method <= 0.0 {
        return Err(MetricsError::DivisionDomain(format!(
            "cost_method = {cost_method}"
        )));
    }
    Ok((acc_method / acc_base) * (cost_base / cost_method))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub match_policy: AnswerMatchPolicy,
    /// Performance floor; when absent, the measured baseline accuracy of the
    /// run is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performance_floor_alpha: Option<f64>,
    pub cue: String,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            match_policy: AnswerMatchPolicy::containment(),
            performance_floor_alpha: None,
            cue: "Wait".to_string(),
        }
    }
}

/// One evaluated response (text plus its backend token count), aligned to a
/// problem by id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub problem_id: String,
    pub text: String,
    pub token_count: u64,
}

/// Histogram over max_i p_i values: ten buckets [k/10, (k+1)/10) plus an
/// exact bucket for 1.0.
pub fn max_p_histogram(max_ps: &[f64]) -> [u64; 11] {
    let mut buckets = [0u64; 11];
    for &p in max_ps {
        let idx = if p >= 1.0 {
            10
        } else {
            ((p * 10.0).floor() as usize).min(9)
        };
        buckets[idx] += 1;
    }
    buckets
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub accuracy_base: f64,
    pub accuracy_method: f64,
    pub tokens_base: f64,
    pub tokens_method: f64,
    pub eta: f64,
    pub mean_wait_base: f64,
    pub mean_wait_method: f64,
    pub alpha: f64,
    pub alpha_satisfied: bool,
    pub max_p_histogram: [u64; 11],
}

impl EfficiencyReport {
    /// Plain-text table mirroring the Method | Acc. | #Tokens | Eff. layout.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>8} {:>10} {:>8}\n",
            "Method", "Acc.", "#Tokens", "Eff."
        ));
        out.push_str(&format!(
            "{:<12} {:>8.2} {:>10.2} {:>8.3}\n",
            "Baseline",
            self.accuracy_base * 100.0,
            self.tokens_base,
            1.0
        ));
        out.push_str(&format!(
            "{:<12} {:>8.2} {:>10.2} {:>8.3}\n",
            "Optimized",
            self.accuracy_method * 100.0,
            self.tokens_method,
            self.eta
        ));
        out
    }
}

/// Aggregates accuracy, token counts, cue counts, eta, the performance-floor
/// check, and the max-p histogram from probe results on originally-incorrect
/// responses.
pub fn evaluate(
    base: &[ResponseRecord],
    method: &[ResponseRecord],
    problems: &[Problem],
    incorrect_max_ps: &[f64],
    cfg: &EvaluationConfig,
) -> Result<EfficiencyReport, MetricsError> {
    if base.is_empty() || method.is_empty() {
        return Err(MetricsError::Alignment("empty response set".into()));
    }
    let lookup = |id: &str| -> Result<&Problem, MetricsError> {
        problems
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| MetricsError::Alignment(format!("no problem with id {id}")))
    };
    let stats = |records: &[ResponseRecord]| -> Result<(f64, f64, f64), MetricsError> {
        let mut correct = 0usize;
        let mut tokens = 0u64;
        let mut waits = 0usize;
        for r in records {
            let problem = lookup(&r.problem_id)?;
            if answer_matches(&r.text, &problem.ground_truth, &cfg.match_policy) {
                correct += 1;
            }
            tokens += r.token_count;
            waits += count_cue(&r.text, &cfg.cue);
        }
        let n = records.len() as f64;
        Ok((correct as f64 / n, tokens as f64 / n, waits as f64 / n))
    };
    let (accuracy_base, tokens_base, mean_wait_base) = stats(base)?;
    let (accuracy_method, tokens_method, mean_wait_method) = stats(method)?;
    let eta = if accuracy_base > 0.0 && tokens_method > 0.0 {
        efficiency_eta(accuracy_method, accuracy_base, tokens_method, tokens_base)?
    } else {
        f64::NAN
    };
    let alpha = cfg.performance_floor_alpha.unwrap_or(accuracy_base);
    Ok(EfficiencyReport {
        accuracy_base,
        accuracy_method,
        tokens_base,
        tokens_method,
        eta,
        mean_wait_base,
        mean_wait_method,
        alpha,
        alpha_satisfied: accuracy_method >= alpha,
        max_p_histogram: max_p_histogram(incorrect_max_ps),
    })
}
