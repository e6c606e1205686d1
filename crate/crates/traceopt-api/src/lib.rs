//! Request/response types for the trajectory-optimization HTTP service.
//!
//! The service is file-oriented for dataset-scale operations: requests name
//! paths on the host the service runs on, and responses summarize what was
//! written. Small, purely computational operations (segmentation, the
//! efficiency ratio) take their inputs inline.

use serde::{Deserialize, Serialize};

pub use traceopt_core::metrics::EfficiencyReport;
pub use traceopt_core::pairs::DropStats;
pub use traceopt_core::pipeline::{RunManifest, StageCounts};
pub use traceopt_core::simpo::SimpoSummary;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentRequest {
    /// The raw model response, including any deliberation delimiters.
    pub response_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireSegment {
    pub index: usize,
    pub text: String,
    pub cue: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub segments: Vec<WireSegment>,
    pub answer_text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaRequest {
    pub accuracy_method: f64,
    pub accuracy_base: f64,
    pub cost_method: f64,
    pub cost_base: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaResponse {
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRequest {
    pub dataset_path: String,
    pub out_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleResponse {
    pub responses_written: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeRequest {
    pub dataset_path: String,
    pub samples_path: String,
    pub out_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeResponse {
    pub optimized_written: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildPairsRequest {
    pub dataset_path: String,
    pub samples_path: String,
    pub optimized_path: String,
    pub out_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildPairsResponse {
    pub pairs_written: u64,
    pub drops: DropStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSimpoRequest {
    pub pairs_path: String,
    pub out_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSimpoResponse {
    pub summary: SimpoSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub dataset_path: String,
    pub base_path: String,
    pub method_path: String,
    pub out_dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub report: EfficiencyReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRequest {
    pub dataset_path: String,
    pub out_dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineResponse {
    pub manifest: RunManifest,
}
