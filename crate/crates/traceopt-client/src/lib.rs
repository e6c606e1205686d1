//! Thin typed client for the trajectory-optimization service.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use traceopt_api as api;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service returned {status}: {message}")]
    Service { status: u16, message: String },
}

#[derive(Clone)]
pub struct ServiceClient {
    http: reqwest::Client,
    base_url: String,
}

impl ServiceClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
        }
    }

    async fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        req: &Req,
    ) -> Result<Resp, ClientError> {
        let response = self
            .http
            .post(format!("{}{}", self.base_url, path))
            .json(req)
            .send()
            .await?;
        let status = response.status();
        if status.is_success() {
            Ok(response.json().await?)
        } else {
            let message = response
                .json::<api::ErrorBody>()
                .await
                .map(|b| b.error)
                .unwrap_or_else(|_| status.to_string());
            Err(ClientError::Service {
                status: status.as_u16(),
                message,
            })
        }
    }

    pub async fn health(&self) -> Result<api::HealthResponse, ClientError> {
        let response = self
            .http
            .get(format!("{}/healthz", self.base_url))
            .send()
            .await?;
        Ok(response.json().await?)
    }

    pub async fn segment(
        &self,
        req: &api::SegmentRequest,
    ) -> Result<api::SegmentResponse, ClientError> {
        self.post("/v1/segment", req).await
    }

    pub async fn eta(&self, req: &api::EtaRequest) -> Result<api::EtaResponse, ClientError> {
        self.post("/v1/eta", req).await
    }

    pub async fn sample(
        &self,
        req: &api::SampleRequest,
    ) -> Result<api::SampleResponse, ClientError> {
        self.post("/v1/sample", req).await
    }

    pub async fn optimize(
        &self,
        req: &api::OptimizeRequest,
    ) -> Result<api::OptimizeResponse, ClientError> {
        self.post("/v1/optimize", req).await
    }

    pub async fn build_pairs(
        &self,
        req: &api::BuildPairsRequest,
    ) -> Result<api::BuildPairsResponse, ClientError> {
        self.post("/v1/pairs/build", req).await
    }

    pub async fn score_simpo(
        &self,
        req: &api::ScoreSimpoRequest,
    ) -> Result<api::ScoreSimpoResponse, ClientError> {
        self.post("/v1/simpo/score", req).await
    }

    pub async fn evaluate(
        &self,
        req: &api::EvaluateRequest,
    ) -> Result<api::EvaluateResponse, ClientError> {
        self.post("/v1/evaluate", req).await
    }

    pub async fn pipeline(
        &self,
        req: &api::PipelineRequest,
    ) -> Result<api::PipelineResponse, ClientError> {
        self.post("/v1/pipeline", req).await
    }
}
