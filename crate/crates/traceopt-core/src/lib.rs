//! Core library for trajectory optimization: segmentation of long
//! chain-of-thought responses, exit-point probing, finalize sampling,
//! judge-validated pruning, preference-pair construction, preference-loss
//! scoring, and efficiency reporting.

pub mod answer;
pub mod backend;
pub mod finalize;
pub mod metrics;
pub mod pairs;
pub mod pipeline;
pub mod probe;
pub mod prompt;
pub mod prune;
pub mod segment;
pub mod simpo;
pub mod types;

pub use answer::{answer_matches, extract_boxed, AnswerMatchPolicy, MatchMode, NormRule};
pub use types::{DelimiterConfig, Problem, SamplingParams, ThinkingPattern, Trajectory};
