//! Replay of recorded object-detector output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::imaging::BoundingBox;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedDetection {
    pub frame_id: String,
    pub class_label: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
}

/// Default classes counted as privacy relevant.
pub const DEFAULT_SENSITIVE_CLASSES: &[&str] = &["id-card", "credit-card", "laptop", "monitor", "document"];
pub const DEFAULT_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    frame_id: String,
    class: String,
    confidence: f64,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
}

#[derive(Debug, thiserror::Error)]
#[error("detection sidecar {path}: {reason}")]
pub struct RecordedDetectionError {
    pub path: String,
    pub reason: String,
}

/// All recorded detections, grouped by frame. CSV: `frame_id,class,confidence,x,y,w,h`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordedDetections {
    frames: BTreeMap<String, Vec<RecordedDetection>>,
}

impl RecordedDetections {
    pub fn new(detections: impl IntoIterator<Item = RecordedDetection>) -> Result<Self, String> {
        let mut frames: BTreeMap<String, Vec<RecordedDetection>> = BTreeMap::new();
        for d in detections {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(format!("frame {}: confidence {} outside [0,1]", d.frame_id, d.confidence));
            }
            frames.entry(d.frame_id.clone()).or_default().push(d);
        }
        Ok(Self { frames })
    }

    pub fn load(path: &Path) -> Result<Self, RecordedDetectionError> {
        let err = |reason: String| RecordedDetectionError { path: path.display().to_string(), reason };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let mut all = Vec::new();
        for row in reader.deserialize::<Row>() {
            let r = row.map_err(|e| err(e.to_string()))?;
            all.push(RecordedDetection {
                frame_id: r.frame_id,
                class_label: r.class,
                confidence: r.confidence,
                bbox: BoundingBox::new(r.x, r.y, r.w, r.h),
            });
        }
        Self::new(all).map_err(err)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RecordedDetectionError> {
        let err = |reason: String| RecordedDetectionError { path: path.display().to_string(), reason };
        let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
        for d in self.frames.values().flatten() {
            let b = d.bbox;
            let row = Row { frame_id: d.frame_id.clone(), class: d.class_label.clone(), confidence: d.confidence, x: b.x, y: b.y, w: b.w, h: b.h };
            w.serialize(row).map_err(|e| err(e.to_string()))?;
        }
        w.flush().map_err(|e| err(e.to_string()))
    }

    /// Detections for one frame; a frame with no rows had no detections.
    pub fn for_frame(&self, frame_id: &str) -> &[RecordedDetection] {
        self.frames.get(frame_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn object_recognition_classify(detections: &[RecordedDetection], sensitive_classes: &[String], threshold: f64) -> bool {
    detections
        .iter()
        .any(|d| d.confidence >= threshold && sensitive_classes.iter().any(|c| c == &d.class_label))
}
