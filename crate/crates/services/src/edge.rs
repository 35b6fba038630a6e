//! Edge tier: decode, detect text, obfuscate, forward to the cloud and relay the verdict.

use std::sync::Arc;
use std::time::Instant;

use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::Semaphore;

use privar_core::detection::TextDetector;
use privar_core::imaging::{decompress, encode_png, obfuscate, Image, ObfuscationParams};

use crate::error::{FrameError, ServiceError};
use crate::link::CloudLink;
use crate::protocol::{decode_b64, encode_b64, AssessRequest, AssessResponse, FrameEnvelope, FrameFormat, Health, ParamsEcho};

#[derive(Clone)]
pub struct EdgeState {
    pub detector: Arc<TextDetector>,
    /// Seed is replaced per frame.
    pub params: ObfuscationParams,
    pub cloud: Arc<dyn CloudLink>,
    pub limiter: Arc<Semaphore>,
}

impl EdgeState {
    pub fn new(detector: TextDetector, params: ObfuscationParams, cloud: Arc<dyn CloudLink>, max_concurrency: usize) -> Self {
        Self { detector: Arc::new(detector), params, cloud, limiter: Arc::new(Semaphore::new(max_concurrency.max(1))) }
    }
}

fn sniff(bytes: &[u8]) -> Option<FrameFormat> {
    if bytes.starts_with(&[0xFF, 0xD8]) {
        Some(FrameFormat::Jpeg)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        Some(FrameFormat::Png)
    } else {
        None
    }
}

/// Decodes the envelope's image, checking it matches the declared format.
pub fn decode_envelope(env: &FrameEnvelope) -> Result<Image, FrameError> {
    let bad = |m: String| ServiceError::BadRequest(m).for_frame(&env.frame_id);
    if env.frame_id.is_empty() {
        return Err(ServiceError::BadRequest("frame_id must not be empty".into()).into());
    }
    if !(1..=100).contains(&env.quality) {
        return Err(bad(format!("quality {} outside 1..=100", env.quality)));
    }
    let bytes = decode_b64(&env.image_data).map_err(|e| bad(format!("image_data is not base64: {e}")))?;
    if sniff(&bytes) != Some(env.format) {
        return Err(bad(format!("image_data is not a {:?} stream", env.format)));
    }
    decompress(&bytes).map_err(|e| bad(format!("image_data: {e}")))
}

/// Detection and obfuscation for one frame; the result carries no raw pixels.
pub fn edge_prepare(detector: &TextDetector, params: &ObfuscationParams, frame_id: &str, image: &Image) -> Result<AssessRequest, FrameError> {
    let detections = detector
        .detect(frame_id, image)
        .map_err(|e| ServiceError::Internal(format!("text detection failed: {e}")).for_frame(frame_id))?;
    let params = params.for_frame(frame_id);
    let internal = |e: privar_core::imaging::ImagingError| ServiceError::Internal(e.to_string()).for_frame(frame_id);
    let obfuscated = obfuscate(image, &detections.boxes, &params).map_err(internal)?;
    let png = encode_png(&obfuscated).map_err(internal)?;
    Ok(AssessRequest {
        frame_id: frame_id.to_string(),
        obfuscated_image: encode_b64(&png),
        boxes: detections.boxes,
        obfuscation_applied: true,
        params_echo: ParamsEcho::from(&params),
    })
}

/// Full edge handling of one envelope, including the synchronous cloud call.
pub async fn edge_handle(state: &EdgeState, env: FrameEnvelope) -> Result<AssessResponse, FrameError> {
    let start = Instant::now();
    let _permit = state.limiter.clone().acquire_owned().await.map_err(|e| ServiceError::Internal(e.to_string()))?;
    let (detector, params) = (state.detector.clone(), state.params);
    let req = tokio::task::spawn_blocking(move || {
        let image = decode_envelope(&env)?;
        edge_prepare(&detector, &params, &env.frame_id, &image)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let edge_ms = start.elapsed().as_millis() as u64;
    let frame_id = req.frame_id.clone();
    let mut resp = state.cloud.assess(req).await?;
    if resp.assessment.frame_id != frame_id {
        return Err(ServiceError::Internal(format!("cloud answered for frame {:?}", resp.assessment.frame_id)).for_frame(frame_id));
    }
    resp.processing_ms.edge = Some(edge_ms);
    Ok(resp)
}

async fn frames_route(State(state): State<EdgeState>, Json(env): Json<FrameEnvelope>) -> Result<Json<AssessResponse>, FrameError> {
    let r = edge_handle(&state, env).await;
    if let Err(e) = &r {
        tracing::warn!(status = %e.error.status(), "{e}");
    }
    r.map(Json)
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), service: "edge".into() })
}

pub fn edge_router(state: EdgeState) -> Router {
    Router::new()
        .route("/v1/frames", post(frames_route))
        .route("/v1/health", get(health))
        .with_state(state)
}
