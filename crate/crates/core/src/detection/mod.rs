//! Text-region detection: the native heuristic detector, ground-truth annotations
//! (oracle-guided masking) and replay of recorded external detector output.

mod heuristic;
mod merge;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use heuristic::{detect_heuristic, morphological_gradient, otsu_threshold, Binarization, DetectorConfig};
pub use merge::merge_boxes;

use crate::dataset::{DatasetItem, Manifest};
use crate::imaging::{BoundingBox, Image};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Heuristic,
    Annotation,
    ExternalFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionSource {
    pub kind: SourceKind,
    pub provenance: String,
}

/// A box set tagged with the one source that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detections {
    pub source: DetectionSource,
    pub boxes: Vec<BoundingBox>,
}

#[derive(Debug, thiserror::Error)]
pub enum DetectionError {
    #[error("item {0} has no annotation record")]
    AnnotationMissing(String),
    #[error("no recorded detections for frame {0}")]
    FrameMissing(String),
    #[error("detection sidecar {path}: {reason}")]
    Sidecar { path: String, reason: String },
    #[error("invalid detector config: {0}")]
    Config(String),
}

/// Ground-truth boxes of `item`, clamped to a `width` x `height` frame.
pub fn load_annotated_boxes(item: &DatasetItem, width: u32, height: u32) -> Result<Detections, DetectionError> {
    let records = item.gt_boxes.as_ref().ok_or_else(|| DetectionError::AnnotationMissing(item.id.clone()))?;
    let boxes = records.iter().filter_map(|r| r.bbox.clamp_to(width, height)).collect();
    Ok(Detections {
        source: DetectionSource { kind: SourceKind::Annotation, provenance: format!("annotation:{}", item.id) },
        boxes,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct SidecarRow {
    frame_id: String,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    confidence: f64,
}

/// Recorded detector output (`frame_id,x,y,w,h,confidence` CSV) keyed by frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalDetections {
    provenance: String,
    frames: BTreeMap<String, Vec<(BoundingBox, f64)>>,
}

impl ExternalDetections {
    pub fn load(path: &Path) -> Result<Self, DetectionError> {
        let err = |reason: String| DetectionError::Sidecar { path: path.display().to_string(), reason };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let mut frames: BTreeMap<String, Vec<(BoundingBox, f64)>> = BTreeMap::new();
        for row in reader.deserialize::<SidecarRow>() {
            let row = row.map_err(|e| err(e.to_string()))?;
            if row.w == 0 || row.h == 0 {
                return Err(err(format!("zero-sized box for frame {}", row.frame_id)));
            }
            frames
                .entry(row.frame_id)
                .or_default()
                .push((BoundingBox::new(row.x, row.y, row.w, row.h), row.confidence));
        }
        Ok(Self { provenance: path.display().to_string(), frames })
    }

    pub fn from_records(provenance: &str, records: impl IntoIterator<Item = (String, BoundingBox, f64)>) -> Self {
        let mut frames: BTreeMap<String, Vec<(BoundingBox, f64)>> = BTreeMap::new();
        for (id, b, c) in records {
            frames.entry(id).or_default().push((b, c));
        }
        Self { provenance: provenance.into(), frames }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DetectionError> {
        let err = |reason: String| DetectionError::Sidecar { path: path.display().to_string(), reason };
        let mut writer = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
        for (frame_id, boxes) in &self.frames {
            for (b, confidence) in boxes {
                writer
                    .serialize(SidecarRow { frame_id: frame_id.clone(), x: b.x, y: b.y, w: b.w, h: b.h, confidence: *confidence })
                    .map_err(|e| err(e.to_string()))?;
            }
        }
        writer.flush().map_err(|e| err(e.to_string()))
    }

    /// Boxes for `frame_id` clamped to the frame, in `(y, x)` order. Unknown frames are errors.
    pub fn boxes(&self, frame_id: &str, width: u32, height: u32) -> Result<Detections, DetectionError> {
        let recorded = self.frames.get(frame_id).ok_or_else(|| DetectionError::FrameMissing(frame_id.into()))?;
        let mut boxes: Vec<BoundingBox> = recorded.iter().filter_map(|(b, _)| b.clamp_to(width, height)).collect();
        merge::sort_boxes(&mut boxes);
        Ok(Detections {
            source: DetectionSource { kind: SourceKind::ExternalFile, provenance: self.provenance.clone() },
            boxes,
        })
    }
}

/// Box source used on the edge for a single frame.
#[derive(Clone, Debug)]
pub enum TextDetector {
    Heuristic(DetectorConfig),
    /// Ground-truth boxes keyed by frame id.
    Annotation(BTreeMap<String, DatasetItem>),
    External(ExternalDetections),
}

impl TextDetector {
    pub fn heuristic(config: DetectorConfig) -> Result<Self, DetectionError> {
        config.validate().map_err(DetectionError::Config)?;
        Ok(TextDetector::Heuristic(config))
    }

    pub fn annotations(manifest: &Manifest) -> Self {
        TextDetector::Annotation(manifest.items.iter().map(|i| (i.id.clone(), i.clone())).collect())
    }

    pub fn kind(&self) -> SourceKind {
        match self {
            TextDetector::Heuristic(_) => SourceKind::Heuristic,
            TextDetector::Annotation(_) => SourceKind::Annotation,
            TextDetector::External(_) => SourceKind::ExternalFile,
        }
    }

    pub fn detect(&self, frame_id: &str, image: &Image) -> Result<Detections, DetectionError> {
        match self {
            TextDetector::Heuristic(config) => Ok(Detections {
                source: DetectionSource { kind: SourceKind::Heuristic, provenance: "heuristic".into() },
                boxes: detect_heuristic(image, config),
            }),
            TextDetector::Annotation(items) => {
                let item = items.get(frame_id).ok_or_else(|| DetectionError::AnnotationMissing(frame_id.into()))?;
                load_annotated_boxes(item, image.width(), image.height())
            }
            TextDetector::External(ext) => ext.boxes(frame_id, image.width(), image.height()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AnnotatedBox, Label, Scene};

    fn item(boxes: Option<Vec<BoundingBox>>) -> DatasetItem {
        DatasetItem {
            id: "it-1".into(),
            image_path: "x.png".into(),
            label: Label::Sensitive,
            scene: Scene::Office,
            sensitive_types: vec![],
            gt_boxes: boxes.map(|v| v.into_iter().map(|bbox| AnnotatedBox { bbox, text: None }).collect()),
            transcript: None,
            fingerprint: String::new(),
        }
    }

    #[test]
    fn annotation_pass_through_and_clamp() {
        let b = vec![BoundingBox::new(1, 1, 4, 4), BoundingBox::new(10, 2, 3, 3)];
        let d = load_annotated_boxes(&item(Some(b.clone())), 50, 50).unwrap();
        assert_eq!(d.boxes, b);
        assert_eq!(d.source.kind, SourceKind::Annotation);

        let d = load_annotated_boxes(&item(Some(vec![BoundingBox::new(45, 40, 20, 20)])), 50, 50).unwrap();
        assert_eq!(d.boxes, vec![BoundingBox::new(45, 40, 5, 10)]);

        assert!(load_annotated_boxes(&item(Some(vec![])), 50, 50).unwrap().boxes.is_empty());
        match load_annotated_boxes(&item(None), 50, 50) {
            Err(DetectionError::AnnotationMissing(id)) => assert_eq!(id, "it-1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("boxes.csv");
        std::fs::write(&path, "frame_id,x,y,w,h,confidence\nf1,10,20,30,5,0.9\nf1,0,2,8,4,0.7\nf2,90,90,30,30,0.5\n").unwrap();
        let ext = ExternalDetections::load(&path).unwrap();
        let d = ext.boxes("f1", 100, 100).unwrap();
        assert_eq!(d.boxes, vec![BoundingBox::new(0, 2, 8, 4), BoundingBox::new(10, 20, 30, 5)]);
        assert_eq!(ext.boxes("f2", 100, 100).unwrap().boxes, vec![BoundingBox::new(90, 90, 10, 10)]);
        assert!(matches!(ext.boxes("nope", 10, 10), Err(DetectionError::FrameMissing(_))));

        let out = dir.path().join("again.csv");
        ext.write_csv(&out).unwrap();
        assert_eq!(ExternalDetections::load(&out).unwrap().boxes("f1", 100, 100).unwrap().boxes.len(), 2);
        assert!(std::fs::read_to_string(&out).unwrap().starts_with("frame_id,x,y,w,h,confidence\n"));
    }
}
