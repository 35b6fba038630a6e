//! Device, edge and cloud tiers wired over HTTP/JSON.

pub mod cloud;
pub mod config;
pub mod device;
pub mod edge;
pub mod error;
pub mod link;
pub mod protocol;

pub use cloud::{cloud_assess, cloud_handle, cloud_router, CloudState};
pub use config::{BackendChoice, DetectorChoice, ServiceConfig};
pub use device::{build_envelope, device_submit, post_envelope, DEVICE_TIMEOUT};
pub use edge::{edge_handle, edge_prepare, edge_router, EdgeState};
pub use error::{FrameError, ServiceError};
pub use link::{CloudLink, HttpCloudLink, InProcessCloudLink, LinkFuture, CLOUD_TIMEOUT};
pub use protocol::{AssessRequest, AssessResponse, FrameEnvelope, FrameFormat, ParamsEcho, TierTimings};

/// Serves `router` on an already bound listener until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, router: axum::Router) -> std::io::Result<()> {
    axum::serve(listener, router).await
}
