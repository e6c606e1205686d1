//! HTTP service for the trajectory-optimization pipeline.
//!
//! One running service is bound to one run configuration (backends, sampling
//! parameters, thresholds). Dataset-scale endpoints take file paths local to
//! the service host and report what they wrote; segmentation and the
//! efficiency ratio are computed inline.

use std::path::Path;
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use traceopt_api as api;
use traceopt_core::metrics::efficiency_eta;
use traceopt_core::pipeline::{
    build_pairs_files, evaluate_files, optimize_files, run_pipeline, sample_to_file,
    score_pairs_file, Backends, PipelineError, RunConfig,
};
use traceopt_core::segment::segment_response;

pub struct AppState {
    pub config: RunConfig,
    pub backends: Backends,
}

impl AppState {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        let backends = Backends::from_config(&config)?;
        Ok(Self { config, backends })
    }
}

type SharedState = Arc<AppState>;

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(api::ErrorBody { error: self.1 })).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::Dataset(_) | PipelineError::Config(_) => StatusCode::BAD_REQUEST,
            PipelineError::Io(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/segment", post(segment))
        .route("/v1/eta", post(eta))
        .route("/v1/sample", post(sample))
        .route("/v1/optimize", post(optimize))
        .route("/v1/pairs/build", post(pairs_build))
        .route("/v1/simpo/score", post(simpo_score))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/pipeline", post(pipeline))
        .with_state(state)
}

async fn healthz() -> Json<api::HealthResponse> {
    Json(api::HealthResponse {
        status: "ok".to_string(),
    })
}

async fn segment(
    State(state): State<SharedState>,
    Json(req): Json<api::SegmentRequest>,
) -> Result<Json<api::SegmentResponse>, ApiError> {
    let lexicon = state
        .config
        .lexicon()
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let trajectory = segment_response(&req.response_text, &state.config.delimiters, &lexicon)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let answer_text = trajectory
        .answer_span
        .clone()
        .map(|span| trajectory.source_text[span].to_string());
    Ok(Json(api::SegmentResponse {
        segments: trajectory
            .segments
            .iter()
            .map(|s| api::WireSegment {
                index: s.index,
                text: s.text.clone(),
                cue: s.cue.clone(),
            })
            .collect(),
        answer_text,
    }))
}

async fn eta(Json(req): Json<api::EtaRequest>) -> Result<Json<api::EtaResponse>, ApiError> {
    let eta = efficiency_eta(
        req.accuracy_method,
        req.accuracy_base,
        req.cost_method,
        req.cost_base,
    )
    .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(Json(api::EtaResponse { eta }))
}

async fn sample(
    State(state): State<SharedState>,
    Json(req): Json<api::SampleRequest>,
) -> Result<Json<api::SampleResponse>, ApiError> {
    let written = sample_to_file(
        Path::new(&req.dataset_path),
        Path::new(&req.out_path),
        &state.config,
        &state.backends,
    )
    .await?;
    Ok(Json(api::SampleResponse {
        responses_written: written,
    }))
}

async fn optimize(
    State(state): State<SharedState>,
    Json(req): Json<api::OptimizeRequest>,
) -> Result<Json<api::OptimizeResponse>, ApiError> {
    let written = optimize_files(
        Path::new(&req.dataset_path),
        Path::new(&req.samples_path),
        Path::new(&req.out_path),
        &state.config,
        &state.backends,
    )
    .await?;
    Ok(Json(api::OptimizeResponse {
        optimized_written: written,
    }))
}

async fn pairs_build(
    State(state): State<SharedState>,
    Json(req): Json<api::BuildPairsRequest>,
) -> Result<Json<api::BuildPairsResponse>, ApiError> {
    let (written, drops) = build_pairs_files(
        Path::new(&req.dataset_path),
        Path::new(&req.samples_path),
        Path::new(&req.optimized_path),
        Path::new(&req.out_path),
        &state.config,
    )
    .await?;
    Ok(Json(api::BuildPairsResponse {
        pairs_written: written,
        drops,
    }))
}

async fn simpo_score(
    State(state): State<SharedState>,
    Json(req): Json<api::ScoreSimpoRequest>,
) -> Result<Json<api::ScoreSimpoResponse>, ApiError> {
    let (_scored, summary) = score_pairs_file(
        Path::new(&req.pairs_path),
        Path::new(&req.out_path),
        &state.config,
        &state.backends,
    )
    .await?;
    Ok(Json(api::ScoreSimpoResponse { summary }))
}

async fn evaluate(
    State(state): State<SharedState>,
    Json(req): Json<api::EvaluateRequest>,
) -> Result<Json<api::EvaluateResponse>, ApiError> {
    let report = evaluate_files(
        Path::new(&req.dataset_path),
        Path::new(&req.base_path),
        Path::new(&req.method_path),
        Path::new(&req.out_dir),
        &state.config,
    )?;
    Ok(Json(api::EvaluateResponse { report }))
}

async fn pipeline(
    State(state): State<SharedState>,
    Json(req): Json<api::PipelineRequest>,
) -> Result<Json<api::PipelineResponse>, ApiError> {
    let manifest = run_pipeline(
        Path::new(&req.dataset_path),
        Path::new(&req.out_dir),
        &state.config,
        &state.backends,
    )
    .await?;
    Ok(Json(api::PipelineResponse { manifest }))
}

/// Binds to `addr` (use port 0 for an ephemeral port) and serves until the
/// task is dropped. Returns the bound address once listening.
pub async fn serve(
    state: SharedState,
    addr: std::net::SocketAddr,
) -> std::io::Result<(std::net::SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!(error = %e, "service terminated");
        }
    });
    Ok((local, handle))
}
