//! Service errors and their HTTP mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use crate::protocol::ErrorBody;

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unobfuscated frame refused")]
    Unobfuscated,
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Internal(String),
    #[error("{stage} stage failed: {message}")]
    Upstream { stage: String, message: String },
    #[error("{0}")]
    Timeout(String),
}

/// An error tied to the frame it concerns.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("frame {frame_id:?}: {error}")]
pub struct FrameError {
    pub frame_id: Option<String>,
    pub error: ServiceError,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unobfuscated => StatusCode::FORBIDDEN,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Upstream { .. } => StatusCode::BAD_GATEWAY,
            ServiceError::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
        }
    }

    pub fn for_frame(self, frame_id: impl Into<String>) -> FrameError {
        FrameError { frame_id: Some(frame_id.into()), error: self }
    }

    /// Rebuilds an error from a downstream response.
    pub fn from_response(status: StatusCode, body: ErrorBody) -> ServiceError {
        match (status, body.stage) {
            (StatusCode::BAD_REQUEST, _) => ServiceError::BadRequest(body.error),
            (StatusCode::FORBIDDEN, _) => ServiceError::Unobfuscated,
            (StatusCode::UNPROCESSABLE_ENTITY, _) => ServiceError::Invalid(body.error),
            (StatusCode::GATEWAY_TIMEOUT, _) => ServiceError::Timeout(body.error),
            (_, Some(stage)) => ServiceError::Upstream { stage, message: body.error },
            _ => ServiceError::Internal(format!("HTTP {status}: {}", body.error)),
        }
    }
}

impl From<ServiceError> for FrameError {
    fn from(error: ServiceError) -> Self {
        FrameError { frame_id: None, error }
    }
}

impl IntoResponse for FrameError {
    fn into_response(self) -> Response {
        let stage = match &self.error {
            ServiceError::Upstream { stage, .. } => Some(stage.clone()),
            _ => None,
        };
        let body = ErrorBody { error: self.error.to_string(), frame_id: self.frame_id, stage };
        (self.error.status(), Json(body)).into_response()
    }
}
