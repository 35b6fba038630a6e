//! Edge-to-cloud transport. The edge only sees this trait, so tests can tap or replace it.

use std::future::Future;
use std::pin::Pin;
use std::time::Duration;

use crate::cloud::{cloud_handle, CloudState};
use crate::error::{FrameError, ServiceError};
use crate::protocol::{AssessRequest, AssessResponse, ErrorBody};

pub type LinkFuture<'a> = Pin<Box<dyn Future<Output = Result<AssessResponse, FrameError>> + Send + 'a>>;

pub trait CloudLink: Send + Sync {
    fn assess(&self, req: AssessRequest) -> LinkFuture<'_>;
}

pub const CLOUD_TIMEOUT: Duration = Duration::from_secs(30);

/// HTTP `POST {base}/v1/assess`, no retries.
pub struct HttpCloudLink {
    client: reqwest::Client,
    url: String,
    timeout: Duration,
}

impl HttpCloudLink {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, ServiceError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(Self { client, url: format!("{}/v1/assess", base_url.trim_end_matches('/')), timeout })
    }
}

impl CloudLink for HttpCloudLink {
    fn assess(&self, req: AssessRequest) -> LinkFuture<'_> {
        Box::pin(async move {
            let frame_id = req.frame_id.clone();
            let fail = |e: ServiceError| e.for_frame(frame_id.clone());
            let resp = self.client.post(&self.url).json(&req).send().await.map_err(|e| {
                if e.is_timeout() {
                    fail(ServiceError::Timeout(format!("cloud did not answer within {:?}", self.timeout)))
                } else {
                    fail(ServiceError::Upstream { stage: "transport".into(), message: e.to_string() })
                }
            })?;
            let status = resp.status();
            if status.is_success() {
                return resp.json::<AssessResponse>().await.map_err(|e| {
                    fail(ServiceError::Upstream { stage: "transport".into(), message: format!("malformed cloud response: {e}") })
                });
            }
            let body = resp.json::<ErrorBody>().await.unwrap_or_else(|e| ErrorBody {
                error: format!("unreadable error body: {e}"),
                frame_id: None,
                stage: None,
            });
            Err(fail(ServiceError::from_response(status, body)))
        })
    }
}

/// Calls the cloud handler directly, without a socket.
pub struct InProcessCloudLink(pub CloudState);

impl CloudLink for InProcessCloudLink {
    fn assess(&self, req: AssessRequest) -> LinkFuture<'_> {
        Box::pin(cloud_handle(&self.0, req))
    }
}
