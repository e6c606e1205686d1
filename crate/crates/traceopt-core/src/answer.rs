//! Answer extraction and matching.
//!
//! Correctness checks come in two flavors: containment (the ground truth
//! appears anywhere in the candidate text) and boxed equality (the last
//! `\boxed{...}` group normalizes equal to the ground truth). Containment is
//! what the probing loop uses; boxed equality is for accuracy reporting.

use serde::{Deserialize, Serialize};

/// How a candidate answer is compared against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Containment,
    BoxedEquality,
}

/// A single normalization rule, applied in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRule {
    Trim,
    CollapseWhitespace,
    StripDollarSigns,
    StripOuterBraces,
}

impl NormRule {
    fn apply(self, s: &str) -> String {
        match self {
            NormRule::Trim => s.trim().to_string(),
            NormRule::CollapseWhitespace => {
                let mut out = String::with_capacity(s.len());
                let mut in_ws = false;
                for ch in s.chars() {
                    if ch.is_whitespace() {
                        in_ws = true;
                    } else {
                        if in_ws && !out.is_empty() {
                            out.push(' ');
                        }
                        in_ws = false;
                        out.push(ch);
                    }
                }
                out
            }
            NormRule::StripDollarSigns => {
                let t = s.trim();
                let stripped = t
                    .strip_prefix('$')
                    .and_then(|x| x.strip_suffix('$'))
                    .unwrap_or(t);
                stripped.to_string()
            }
            NormRule::StripOuterBraces => {
                let t = s.trim();
                // Only strip when the outer pair actually wraps the whole string.
                if let Some(inner) = t.strip_prefix('{').and_then(|x| x.strip_suffix('}')) {
                    if braces_balanced(inner) {
                        return inner.to_string();
                    }
                }
                t.to_string()
            }
        }
    }
}

fn braces_balanced(s: &str) -> bool {
    let mut depth: i64 = 0;
    for ch in s.chars() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

/// Answer-matching policy: mode plus the ordered normalization rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerMatchPolicy {
    pub mode: MatchMode,
    pub normalization: Vec<NormRule>,
}

impl Default for AnswerMatchPolicy {
    fn default() -> Self {
        Self {
            mode: MatchMode::Containment,
            normalization: vec![
                NormRule::Trim,
                NormRule::CollapseWhitespace,
                NormRule::StripDollarSigns,
                NormRule::StripOuterBraces,
            ],
        }
    }
}

impl AnswerMatchPolicy {
    pub fn containment() -> Self {
        Self::default()
    }

    pub fn boxed_equality() -> Self {
        Self {
            mode: MatchMode::BoxedEquality,
            ..Self::default()
        }
    }

    /// Applies the rule list repeatedly until a fixpoint, so normalization is
    /// idempotent (e.g. nested outer braces all come off).
    pub fn normalize(&self, s: &str) -> String {
        let mut cur = s.to_string();
        for _ in 0..64 {
            let mut next = cur.clone();
            for rule in &self.normalization {
                next = rule.apply(&next);
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
        cur
    }
}

/// Returns the content of the last balanced `\boxed{...}` group, if any.
pub fn extract_boxed(text: &str) -> Option<String> {
    const MARKER: &str = "\\boxed{";
    let mut last: Option<String> = None;
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find(MARKER) {
        let open = search_from + rel + MARKER.len() - 1; // index of '{'
        let bytes = text.as_bytes();
        let mut depth = 0usize;
        let mut end = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            match b {
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(close) => {
                last = Some(text[open + 1..close].to_string());
                search_from = close + 1;
            }
            // Unbalanced group: skip past the marker and keep scanning.
            None => search_from = open + 1,
        }
    }
    last
}

/// Checks a candidate answer against the ground truth under the policy.
///
/// Ground truth must be non-empty; an empty ground truth never matches.
pub fn answer_matches(candidate: &str, ground_truth: &str, policy: &AnswerMatchPolicy) -> bool {
    if ground_truth.is_empty() {
        return false;
    }
    let truth = policy.normalize(ground_truth);
    match policy.mode {
        MatchMode::Containment => policy.normalize(candidate).contains(&truth),
        MatchMode::BoxedEquality => match extract_boxed(candidate) {
            Some(boxed) => policy.normalize(&boxed) == truth,
            None => false,
        },
    }
}
