//! Length-normalized preference-loss scoring (no weight updates).
//!
//! For a pair, margin = beta * (avg logprob of chosen - avg logprob of
//! rejected) - gamma and loss = -ln(sigmoid(margin)), computed in the
//! numerically stable softplus form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, TextBackend};
use crate::pairs::PreferencePair;

#[derive(Debug, Error)]
pub enum SimpoError {
    #[error("empty token sequence")]
    EmptySequence,
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimpoConfig {
    pub beta: f64,
    /// Target reward margin, stored directly (not as gamma/beta).
    pub gamma: f64,
}

impl Default for SimpoConfig {
    fn default() -> Self {
        // gamma/beta = 0.3
        Self {
            beta: 10.0,
            gamma: 3.0,
        }
    }
}

impl SimpoConfig {
    pub fn validate(&self) -> Result<(), SimpoError> {
        if !(self.beta > 0.0) {
            return Err(SimpoError::InvalidBeta(self.beta));
        }
        Ok(())
    }
}

/// Arithmetic mean of per-token logprobs.
pub fn average_logprob(token_logprobs: &[f64]) -> Result<f64, SimpoError> {
    if token_logprobs.is_empty() {
        return Err(SimpoError::EmptySequence);
    }
    Ok(token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64)
}

/// Numerically stable softplus: ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Returns (margin, loss) with loss = -ln(sigmoid(margin)) = softplus(-margin).
pub fn simpo_loss(avg_w: f64, avg_l: f64, cfg: &SimpoConfig) -> (f64, f64) {
    let margin = cfg.beta * (avg_w - avg_l) - cfg.gamma;
    (margin, softplus(-margin))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair_id: String,
    pub avg_logprob_chosen: f64,
    pub avg_logprob_rejected: f64,
    pub margin: f64,
    pub loss: f64,
    pub preferred_ok: bool,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SimpoSummary {
    pub pairs: usize,
    pub mean_loss: f64,
    pub fraction_preferred_ok: f64,
}

/// Pairwise-stable sum (recursive halving).
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Scores every pair with teacher-forced logprobs from the backend.
pub async fn score_dataset(
    pairs: &[PreferencePair],
    backend: &dyn TextBackend,
    cfg: &SimpoConfig,
) -> Result<(Vec<ScoredPair>, SimpoSummary), SimpoError> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(SimpoError::EmptySequence);
    }
    let mut scored = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let chosen_lps = backend.echo_logprobs(&pair.prompt, &pair.chosen).await?;
        let rejected_lps = backend.echo_logprobs(&pair.prompt, &pair.rejected).await?;
        let avg_w = average_logprob(&chosen_lps.iter().map(|t| t.logprob).collect::<Vec<_>>())?;
        let avg_l = average_logprob(&rejected_lps.iter().map(|t| t.logprob).collect::<Vec<_>>())?;
        let (margin, loss) = simpo_loss(avg_w, avg_l, cfg);
        scored.push(ScoredPair {
            pair_id: format!("{}#{}", pair.problem_id, i),
            avg_logprob_chosen: avg_w,
            avg_logprob_rejected: avg_l,
            margin,
            loss,
            preferred_ok: margin > 0.0,
        });
    }
    let losses: Vec<f64> = scored.iter().map(|s| s.loss).collect();
    let ok = scored.iter().filter(|s| s.preferred_ok).count();
    let summary = SimpoSummary {
        pairs: scored.len(),
        mean_loss: pairwise_sum(&losses) / scored.len() as f64,
        fraction_preferred_ok: ok as f64 / scored.len() as f64,
    };
    Ok((scored, summary))
}
