//! JSON wire types exchanged between device, edge and cloud.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use privar_core::assessment::RiskAssessment;
use privar_core::imaging::{BoundingBox, ObfuscationParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    Jpeg,
    Png,
}

/// A captured frame as uploaded by the device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEnvelope {
    pub frame_id: String,
    pub captured_at: DateTime<Utc>,
    pub format: FrameFormat,
    /// Base64 of the encoded image.
    pub image_data: String,
    /// Encoder quality used at capture.
    pub quality: u8,
}

/// Obfuscation parameters without the per-frame seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub sigma: f64,
    pub beta: f64,
    pub pad: u32,
}

impl From<&ObfuscationParams> for ParamsEcho {
    fn from(p: &ObfuscationParams) -> Self {
        Self { sigma: p.sigma, beta: p.beta, pad: p.pad }
    }
}

/// The obfuscated frame forwarded from edge to cloud. The image is a base64 PNG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessRequest {
    pub frame_id: String,
    pub obfuscated_image: String,
    pub boxes: Vec<BoundingBox>,
    pub obfuscation_applied: bool,
    pub params_echo: ParamsEcho,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierTimings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<u64>,
    pub cloud: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessResponse {
    #[serde(flatten)]
    pub assessment: RiskAssessment,
    pub processing_ms: TierTimings,
}

/// Body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub service: String,
}

pub fn encode_b64(bytes: &[u8]) -> String {
    B64.encode(bytes)
}

pub fn decode_b64(text: &str) -> Result<Vec<u8>, base64::DecodeError> {
    B64.decode(text.trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_flattens_assessment() {
        let r = AssessResponse {
            assessment: RiskAssessment {
                frame_id: "f".into(),
                scene_label: "office".into(),
                scene_rationale: "r".into(),
                topic_inference: "t".into(),
                risk: true,
                risk_rationale: "x".into(),
                regions: vec![BoundingBox::new(1, 2, 3, 4)],
                backend_id: "mock".into(),
            },
            processing_ms: TierTimings { edge: Some(3), cloud: 2 },
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["frame_id"], "f");
        assert_eq!(v["processing_ms"]["edge"], 3);
        assert_eq!(serde_json::from_value::<AssessResponse>(v).unwrap(), r);
    }

    #[test]
    fn envelope_format_names() {
        assert_eq!(serde_json::to_value(FrameFormat::Jpeg).unwrap(), "jpeg");
        assert!(decode_b64("not base64!").is_err());
    }
}
