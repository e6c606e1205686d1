//! Shared domain types: problems, trajectories, sampling parameters.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TypeError {
    #[error("ground_truth must be non-empty for problem {0}")]
    EmptyGroundTruth(String),
    #[error("trajectory must contain at least one segment")]
    NoSegments,
    #[error("segments do not losslessly reproduce the think span")]
    LossySegmentation,
    #[error("segment indices must be contiguous starting at 1")]
    NonContiguousIndices,
    #[error("invalid sampling params: {0}")]
    InvalidSamplingParams(String),
}

/// A single task instance with a known ground-truth answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement: String,
    pub ground_truth: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Problem {
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        ground_truth: impl Into<String>,
    ) -> Result<Self, TypeError> {
        let id = id.into();
        let ground_truth = ground_truth.into();
        if ground_truth.is_empty() {
            return Err(TypeError::EmptyGroundTruth(id));
        }
        Ok(Self {
            id,
            statement: statement.into(),
            ground_truth,
            metadata: BTreeMap::new(),
        })
    }
}

/// One thinking pattern: a verbatim slice of the deliberation text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkingPattern {
    /// 1-based ordinal within its trajectory.
    pub index: usize,
    pub text: String,
    /// The boundary cue that opened this segment, absent for the first one.
    pub cue: Option<String>,
}

/// An ordered, lossless segmentation of a response's deliberation block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<ThinkingPattern>,
    pub source_text: String,
    pub think_span: Range<usize>,
    pub answer_span: Option<Range<usize>>,
}

impl Trajectory {
    /// Builds a trajectory, checking the lossless-segmentation invariant:
    /// the concatenation of segment texts equals the think span byte-for-byte.
    pub fn new(
        source_text: String,
        think_span: Range<usize>,
        answer_span: Option<Range<usize>>,
        segments: Vec<ThinkingPattern>,
    ) -> Result<Self, TypeError> {
        if segments.is_empty() {
            return Err(TypeError::NoSegments);
        }
        for (i, seg) in segments.iter().enumerate() {
            if seg.index != i + 1 {
                return Err(TypeError::NonContiguousIndices);
            }
        }
        let concat: String = segments.iter().map(|s| s.text.as_str()).collect();
        if concat != source_text[think_span.clone()] {
            return Err(TypeError::LossySegmentation);
        }
        Ok(Self {
            source_text,
            think_span,
            answer_span,
            segments,
        })
    }

    /// Builds a standalone trajectory whose source is exactly the segments.
    pub fn from_segments(segments: Vec<ThinkingPattern>) -> Result<Self, TypeError> {
        let text: String = segments.iter().map(|s| s.text.as_str()).collect();
        let span = 0..text.len();
        Self::new(text, span, None, segments)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// The deliberation text this trajectory segments.
    pub fn think_text(&self) -> &str {
        &self.source_text[self.think_span.clone()]
    }

    /// Concatenation of the first `i` segments (1-based, inclusive).
    pub fn prefix_text(&self, i: usize) -> String {
        self.segments[..i].iter().map(|s| s.text.as_str()).collect()
    }
}

/// Sampling parameters forwarded to a generation backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Number of parallel samples per request.
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.6,
            top_p: 0.95,
            max_tokens: 8192,
            n: 1,
            seed: None,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), TypeError> {
        if !(self.temperature >= 0.0) {
            return Err(TypeError::InvalidSamplingParams(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(TypeError::InvalidSamplingParams(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_tokens == 0 {
            return Err(TypeError::InvalidSamplingParams(
                "max_tokens must be positive".into(),
            ));
        }
        if self.n == 0 {
            return Err(TypeError::InvalidSamplingParams("n must be positive".into()));
        }
        Ok(())
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }
}

/// Delimiters that frame the deliberation block inside a raw response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelimiterConfig {
    pub open: String,
    pub close: String,
}

impl Default for DelimiterConfig {
    fn default() -> Self {
        Self {
            open: "<think>".to_string(),
            close: "</think>".to_string(),
        }
    }
}

/// Byte spans of the deliberation and answer blocks within a response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseParts {
    pub think_span: Range<usize>,
    pub answer_span: Option<Range<usize>>,
}

/// Splits a raw response into a deliberation block and a post-deliberation
/// answer block. If the close delimiter is absent the whole remainder is the
/// deliberation block; if the open delimiter is absent the whole response is.
pub fn split_response(text: &str, delims: &DelimiterConfig) -> ResponseParts {
    let think_start = match text.find(&delims.open) {
        Some(pos) => pos + delims.open.len(),
        None => 0,
    };
    match text[think_start..].find(&delims.close) {
        Some(rel) => {
            let think_end = think_start + rel;
            let answer_start = think_end + delims.close.len();
            ResponseParts {
                think_span: think_start..think_end,
                answer_span: Some(answer_start..text.len()),
            }
        }
        None => ResponseParts {
            think_span: think_start..text.len(),
            answer_span: None,
        },
    }
}
