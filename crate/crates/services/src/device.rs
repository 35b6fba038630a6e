//! Device tier: capture (load), compress and submit a frame to the edge.

use std::path::Path;
use std::time::Duration;

use chrono::Utc;

use privar_core::imaging::{compress, decompress, Image};

use crate::error::{FrameError, ServiceError};
use crate::protocol::{encode_b64, AssessResponse, ErrorBody, FrameEnvelope, FrameFormat};

pub const DEVICE_TIMEOUT: Duration = Duration::from_secs(35);

/// JPEG-compresses `image` into an envelope. A fresh UUID is used when `frame_id` is `None`.
pub fn build_envelope(image: &Image, quality: u8, frame_id: Option<&str>) -> Result<FrameEnvelope, ServiceError> {
    let bytes = compress(image, quality).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    Ok(FrameEnvelope {
        frame_id: frame_id.map_or_else(|| uuid::Uuid::new_v4().to_string(), str::to_string),
        captured_at: Utc::now(),
        format: FrameFormat::Jpeg,
        image_data: encode_b64(&bytes),
        quality,
    })
}

pub fn load_image(path: &Path) -> Result<Image, ServiceError> {
    let bytes = std::fs::read(path).map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))?;
    decompress(&bytes).map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))
}

/// Posts one envelope to `{edge_url}/v1/frames`. One attempt only.
pub async fn post_envelope(client: &reqwest::Client, edge_url: &str, env: &FrameEnvelope) -> Result<AssessResponse, FrameError> {
    let url = format!("{}/v1/frames", edge_url.trim_end_matches('/'));
    let fail = |e: ServiceError| e.for_frame(&env.frame_id);
    let resp = client.post(&url).json(env).send().await.map_err(|e| {
        if e.is_timeout() {
            fail(ServiceError::Timeout(format!("edge at {edge_url} did not answer in time")))
        } else {
            fail(ServiceError::Upstream { stage: "transport".into(), message: e.to_string() })
        }
    })?;
    let status = resp.status();
    if status.is_success() {
        let body: AssessResponse = resp.json().await.map_err(|e| {
            fail(ServiceError::Upstream { stage: "transport".into(), message: format!("malformed edge response: {e}") })
        })?;
        if body.assessment.frame_id != env.frame_id {
            return Err(fail(ServiceError::Internal(format!("edge answered for frame {:?}", body.assessment.frame_id))));
        }
        return Ok(body);
    }
    let body = resp
        .json::<ErrorBody>()
        .await
        .unwrap_or_else(|e| ErrorBody { error: format!("unreadable error body: {e}"), frame_id: None, stage: None });
    Err(fail(ServiceError::from_response(status, body)))
}

pub fn device_client(timeout: Duration) -> Result<reqwest::Client, ServiceError> {
    reqwest::Client::builder().timeout(timeout).build().map_err(|e| ServiceError::Internal(e.to_string()))
}

/// Load, compress, wrap and submit `image_path`.
pub async fn device_submit(
    image_path: &Path,
    edge_url: &str,
    quality: u8,
    frame_id: Option<&str>,
    timeout: Duration,
) -> Result<AssessResponse, FrameError> {
    let image = load_image(image_path)?;
    let env = build_envelope(&image, quality, frame_id)?;
    let client = device_client(timeout)?;
    post_envelope(&client, edge_url, &env).await
}
