//! Text extraction sources feeding the rule-based baseline and the CER metric.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetItem;
use crate::detection::{detect_heuristic, DetectorConfig};
use crate::imaging::{BoundingBox, Image};
use crate::ocr::GlyphReader;

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("item {id}: no {kind} text available")]
    SourceMissing { id: String, kind: &'static str },
    #[error("OCR sidecar {path}: {reason}")]
    Sidecar { path: String, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct OcrRow {
    frame_id: String,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
    text: String,
}

/// Recorded OCR output: CSV `frame_id,x,y,w,h,text`, one row per region.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordedOcr {
    frames: BTreeMap<String, Vec<(BoundingBox, String)>>,
}

impl RecordedOcr {
    pub fn load(path: &Path) -> Result<RecordedOcr, ExtractError> {
        let err = |reason: String| ExtractError::Sidecar { path: path.display().to_string(), reason };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let mut out = RecordedOcr::default();
        for row in reader.deserialize::<OcrRow>() {
            let row = row.map_err(|e| err(e.to_string()))?;
            out.insert(&row.frame_id, BoundingBox::new(row.x, row.y, row.w, row.h), &row.text);
        }
        Ok(out)
    }

    pub fn insert(&mut self, frame_id: &str, region: BoundingBox, text: &str) {
        self.frames.entry(frame_id.to_string()).or_default().push((region, text.to_string()));
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ExtractError> {
        let err = |reason: String| ExtractError::Sidecar { path: path.display().to_string(), reason };
        let mut writer = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
        for (frame_id, regions) in &self.frames {
            for (b, text) in regions {
                let row = OcrRow { frame_id: frame_id.clone(), x: b.x, y: b.y, w: b.w, h: b.h, text: text.clone() };
                writer.serialize(row).map_err(|e| err(e.to_string()))?;
            }
        }
        writer.flush().map_err(|e| err(e.to_string()))
    }

    pub fn regions(&self, frame_id: &str) -> Option<&[(BoundingBox, String)]> {
        self.frames.get(frame_id).map(Vec::as_slice)
    }
}

/// Where extracted text comes from.
#[derive(Clone, Debug)]
pub enum OcrSource {
    /// Ground-truth transcripts from the manifest (perfect OCR).
    Transcript,
    /// Recorded output of an external OCR engine.
    ExternalFile(RecordedOcr),
    /// Heuristic detection followed by the built-in glyph reader, run on the pixels.
    Glyph { detector: DetectorConfig, reader: GlyphReader },
}

impl OcrSource {
    pub fn glyph() -> OcrSource {
        OcrSource::Glyph { detector: DetectorConfig::default(), reader: GlyphReader::default() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OcrSource::Transcript => "transcript",
            OcrSource::ExternalFile(_) => "external-file",
            OcrSource::Glyph { .. } => "glyph",
        }
    }
}

/// Joins region texts top to bottom, then left to right.
pub fn reading_order(mut regions: Vec<(BoundingBox, String)>) -> String {
    regions.sort_by_key(|(b, _)| (b.y, b.x));
    regions.into_iter().map(|(_, t)| t).filter(|t| !t.is_empty()).collect::<Vec<_>>().join("\n")
}

/// Text visible in `image` for `item`, according to `source`.
pub fn extract_text(item: &DatasetItem, image: &Image, source: &OcrSource) -> Result<String, ExtractError> {
    let missing = || ExtractError::SourceMissing { id: item.id.clone(), kind: source.name() };
    match source {
        OcrSource::Transcript => {
            if let Some(t) = &item.transcript {
                return Ok(t.clone());
            }
            let regions: Vec<(BoundingBox, String)> = item
                .gt_boxes
                .iter()
                .flatten()
                .filter_map(|b| b.text.clone().map(|t| (b.bbox, t)))
                .collect();
            if regions.is_empty() {
                Err(missing())
            } else {
                Ok(reading_order(regions))
            }
        }
        OcrSource::ExternalFile(recorded) => {
            recorded.regions(&item.id).map(|r| reading_order(r.to_vec())).ok_or_else(missing)
        }
        OcrSource::Glyph { detector, reader } => {
            let boxes = detect_heuristic(image, detector);
            Ok(reader.read_regions(image, &boxes))
        }
    }
}
