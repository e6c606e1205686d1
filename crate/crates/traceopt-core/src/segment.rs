//! Lossless segmentation of deliberation text into thinking patterns.
//!
//! A new segment opens exactly where a granularity unit (paragraph by
//! default) begins, after leading whitespace, with one of the lexicon cues
//! followed by a non-alphanumeric character. Separators attach to the
//! preceding segment, so concatenating the segments reproduces the input
//! byte-for-byte.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    split_response, DelimiterConfig, ThinkingPattern, Trajectory, TypeError,
};

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("think text is empty")]
    EmptyInput,
    #[error("cue lexicon must be non-empty")]
    EmptyLexicon,
    #[error("cue {0:?} is a prefix of cue {1:?}")]
    AmbiguousCues(String, String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Paragraph,
    Sentence,
}

/// Ordered cue strings that mark thinking-pattern boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CueLexicon {
    pub cues: Vec<String>,
    pub granularity: Granularity,
}

impl Default for CueLexicon {
    fn default() -> Self {
        Self::new(
            ["Wait", "Alternatively", "Hmm", "But wait", "However"]
                .into_iter()
                .map(String::from)
                .collect(),
            Granularity::Paragraph,
        )
        .expect("default lexicon is valid")
    }
}

impl CueLexicon {
    pub fn new(cues: Vec<String>, granularity: Granularity) -> Result<Self, SegmentError> {
        if cues.is_empty() || cues.iter().any(|c| c.is_empty()) {
            return Err(SegmentError::EmptyLexicon);
        }
        for a in &cues {
            for b in &cues {
                if a != b && b.starts_with(a.as_str()) {
                    return Err(SegmentError::AmbiguousCues(a.clone(), b.clone()));
                }
            }
        }
        Ok(Self { cues, granularity })
    }

    /// Returns the cue that opens `unit`, if any. The unit's leading
    /// whitespace is skipped and the cue must be followed by a
    /// non-alphanumeric character (or end of text).
    fn match_cue(&self, unit: &str) -> Option<&str> {
        let trimmed = unit.trim_start();
        for cue in &self.cues {
            if let Some(rest) = trimmed.strip_prefix(cue.as_str()) {
                let boundary_ok = match rest.chars().next() {
                    None => true,
                    Some(c) => !c.is_alphanumeric(),
                };
                if boundary_ok {
                    return Some(cue);
                }
            }
        }
        None
    }
}

// A paragraph gap: a newline, optionally blank lines, ending right before
// the first character of the next paragraph.
static PARAGRAPH_GAP: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\n[ \t]*\n(?:[ \t]*\n)*").expect("valid regex"));

// A sentence gap: terminal punctuation plus trailing whitespace.
static SENTENCE_GAP: Lazy<Regex> =
    Lazy::new(|| Regex::new(r#"[.!?]["')\]]*[ \t\r\n]+"#).expect("valid regex"));

/// Byte offsets where granularity units begin (offset 0 excluded).
fn unit_starts(text: &str, granularity: Granularity) -> Vec<usize> {
    let re = match granularity {
        Granularity::Paragraph => &PARAGRAPH_GAP,
        Granularity::Sentence => &SENTENCE_GAP,
    };
    re.find_iter(text)
        .map(|m| m.end())
        .filter(|&e| e > 0 && e < text.len())
        .collect()
}

/// Splits `think_text` into thinking patterns at cue boundaries.
pub fn segment(think_text: &str, lexicon: &CueLexicon) -> Result<Vec<ThinkingPattern>, SegmentError> {
    if think_text.is_empty() {
        return Err(SegmentError::EmptyInput);
    }
    let mut boundaries: Vec<(usize, String)> = Vec::new();
    for start in unit_starts(think_text, lexicon.granularity) {
        if let Some(cue) = lexicon.match_cue(&think_text[start..]) {
            boundaries.push((start, cue.to_string()));
        }
    }

    let mut segments = Vec::with_capacity(boundaries.len() + 1);
    let mut prev = 0usize;
    let mut prev_cue: Option<String> = None;
    for (start, cue) in boundaries {
        segments.push(ThinkingPattern {
            index: segments.len() + 1,
            text: think_text[prev..start].to_string(),
            cue: prev_cue.take(),
        });
        prev = start;
        prev_cue = Some(cue);
    }
    segments.push(ThinkingPattern {
        index: segments.len() + 1,
        text: think_text[prev..].to_string(),
        cue: prev_cue,
    });
    Ok(segments)
}

/// Parses a raw response into deliberation/answer blocks and segments the
/// deliberation block.
pub fn segment_response(
    source_text: &str,
    delims: &DelimiterConfig,
    lexicon: &CueLexicon,
) -> Result<Trajectory, SegmentError> {
    let parts = split_response(source_text, delims);
    let segments = segment(&source_text[parts.think_span.clone()], lexicon)?;
    Ok(Trajectory::new(
        source_text.to_string(),
        parts.think_span,
        parts.answer_span,
        segments,
    )?)
}

/// Counts whole-word, case-sensitive occurrences of `cue` in `text`.
pub fn count_cue(text: &str, cue: &str) -> usize {
    assert!(!cue.is_empty(), "cue must be non-empty");
    let mut count = 0;
    let mut from = 0;
    while let Some(rel) = text[from..].find(cue) {
        let start = from + rel;
        let end = start + cue.len();
        let before_ok = text[..start]
            .chars()
            .next_back()
            .map_or(true, |c| !c.is_alphanumeric());
        let after_ok = text[end..]
            .chars()
            .next()
            .map_or(true, |c| !c.is_alphanumeric());
        if before_ok && after_ok {
            count += 1;
        }
        from = start + cue.len().max(1);
    }
    count
}
