//! Cloud tier: staged risk assessment of already obfuscated frames.

use std::sync::Arc;
use std::time::Instant;

use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::Semaphore;

use privar_core::assessment::{assess_with, AssessError, BackendError, CotPromptBuilder, VlmBackend};
use privar_core::imaging::decompress;

use crate::error::{FrameError, ServiceError};
use crate::protocol::{decode_b64, AssessRequest, AssessResponse, Health, TierTimings};

#[derive(Clone)]
pub struct CloudState {
    pub backend: Arc<dyn VlmBackend>,
    pub limiter: Arc<Semaphore>,
}

impl CloudState {
    pub fn new(backend: Arc<dyn VlmBackend>, max_concurrency: usize) -> Self {
        Self { backend, limiter: Arc::new(Semaphore::new(max_concurrency.max(1))) }
    }
}

fn assess_error(e: AssessError) -> ServiceError {
    match e {
        AssessError::Backend { stage, source: BackendError::Timeout(d) } => {
            ServiceError::Timeout(format!("{stage} stage timed out after {d:?}"))
        }
        AssessError::Backend { stage, source } => ServiceError::Upstream { stage: stage.to_string(), message: source.to_string() },
        AssessError::Parse { stage, raw } => ServiceError::Upstream { stage: stage.to_string(), message: format!("unparseable reply {raw:?}") },
        AssessError::Imaging(e) => ServiceError::Internal(e.to_string()),
    }
}

/// Validates and assesses one request. Blocking; run off the async executor.
pub fn cloud_assess(backend: &dyn VlmBackend, req: &AssessRequest) -> Result<AssessResponse, FrameError> {
    let start = Instant::now();
    let fail = |e: ServiceError| e.for_frame(&req.frame_id);
    if !req.obfuscation_applied {
        return Err(fail(ServiceError::Unobfuscated));
    }
    if req.frame_id.is_empty() {
        return Err(ServiceError::Invalid("frame_id must not be empty".into()).into());
    }
    let png = decode_b64(&req.obfuscated_image).map_err(|e| fail(ServiceError::BadRequest(format!("obfuscated_image: {e}"))))?;
    let image = decompress(&png).map_err(|e| fail(ServiceError::BadRequest(format!("obfuscated_image: {e}"))))?;
    for (i, b) in req.boxes.iter().enumerate() {
        if !b.fits(image.width(), image.height()) {
            return Err(fail(ServiceError::Invalid(format!(
                "box {i} {b:?} exceeds the {}x{} frame",
                image.width(),
                image.height()
            ))));
        }
    }
    // forward the exact bytes received so fingerprints match what the edge sent
    let builder = CotPromptBuilder::from_png(png, image.width(), image.height(), &req.boxes);
    let assessment = assess_with(&req.frame_id, &builder, &req.boxes, backend).map_err(|e| fail(assess_error(e)))?;
    Ok(AssessResponse {
        assessment,
        processing_ms: TierTimings { edge: None, cloud: start.elapsed().as_millis() as u64 },
    })
}

/// Runs [`cloud_assess`] on the blocking pool under the concurrency cap.
pub async fn cloud_handle(state: &CloudState, req: AssessRequest) -> Result<AssessResponse, FrameError> {
    let _permit = state.limiter.clone().acquire_owned().await.map_err(|e| ServiceError::Internal(e.to_string()))?;
    let backend = state.backend.clone();
    tokio::task::spawn_blocking(move || cloud_assess(backend.as_ref(), &req))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn assess_route(State(state): State<CloudState>, Json(req): Json<AssessRequest>) -> Result<Json<AssessResponse>, FrameError> {
    let r = cloud_handle(&state, req).await;
    if let Err(e) = &r {
        tracing::warn!(status = %e.error.status(), "{e}");
    }
    r.map(Json)
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), service: "cloud".into() })
}

pub fn cloud_router(state: CloudState) -> Router {
    Router::new()
        .route("/v1/assess", post(assess_route))
        .route("/v1/health", get(health))
        .with_state(state)
}
