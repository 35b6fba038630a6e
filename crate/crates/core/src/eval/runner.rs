//! Runs one classifier over a manifest under a protection mode.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, confusion, cer, mean_std, plr, LeakagePair};
use super::report::{ItemRow, Report};
use crate::assessment::{extract_prompt, VlmBackend};
use crate::baselines::{Classifier, ItemContext};
use crate::dataset::{DatasetItem, Manifest};
use crate::detection::{load_annotated_boxes, DetectorConfig, TextDetector};
use crate::imaging::{build_mask, compress, decompress, encode_png, obfuscate, BoundingBox, Image, ObfuscationParams};
use crate::ocr::GlyphReader;

/// Which boxes drive obfuscation before a frame is classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtectionMode {
    /// Detector boxes.
    Privar,
    /// Detector boxes are computed but the frame is forwarded untouched.
    NoObfuscation,
    /// Ground-truth annotation boxes.
    OracleGuided,
}

impl ProtectionMode {
    pub const ALL: [ProtectionMode; 3] = [ProtectionMode::Privar, ProtectionMode::NoObfuscation, ProtectionMode::OracleGuided];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtectionMode::Privar => "privar",
            ProtectionMode::NoObfuscation => "no-obfuscation",
            ProtectionMode::OracleGuided => "oracle-guided",
        }
    }
}

impl std::fmt::Display for ProtectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ProtectionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown protection mode {s:?} (expected privar, no-obfuscation or oracle-guided)"))
    }
}

/// OCR used for the character error rate: heuristic detection plus the glyph reader.
#[derive(Clone, Debug, Default)]
pub struct OcrProbe {
    pub detector: DetectorConfig,
    pub reader: GlyphReader,
}

impl OcrProbe {
    pub fn read(&self, image: &Image) -> String {
        let boxes = crate::detection::detect_heuristic(image, &self.detector);
        self.reader.read_regions(image, &boxes)
    }
}

pub struct EvalConfig {
    pub params: ObfuscationParams,
    pub quality: u8,
    pub workers: usize,
    /// Box source in `privar` and `no-obfuscation` modes.
    pub detector: TextDetector,
    /// Enables CER between the probe's reading of the captured and of the forwarded frame.
    pub ocr: Option<OcrProbe>,
    /// Enables PLR: this backend lists sensitive items in original and forwarded frames.
    pub leakage: Option<Arc<dyn VlmBackend>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            params: ObfuscationParams::default(),
            quality: crate::imaging::DEFAULT_QUALITY,
            workers: 1,
            detector: TextDetector::Heuristic(DetectorConfig::default()),
            ocr: None,
            leakage: None,
        }
    }
}

/// One line per sensitive item; bullets and numbering stripped, `NONE` means no items.
pub fn parse_item_list(reply: &str) -> Vec<String> {
    reply
        .lines()
        .map(|l| {
            let t = l.trim().trim_start_matches(['-', '*', '•']).trim_start();
            let digits = t.bytes().take_while(u8::is_ascii_digit).count();
            if digits > 0 && matches!(t.as_bytes().get(digits), Some(b'.' | b')')) {
                t[digits + 1..].trim().to_string()
            } else {
                t.to_string()
            }
        })
        .filter(|t| !t.is_empty() && !t.eq_ignore_ascii_case("none"))
        .collect()
}

struct Prepared {
    captured: Image,
    forwarded: Image,
    boxes: Vec<BoundingBox>,
    mask_pixels: u64,
}

fn prepare(manifest: &Manifest, item: &DatasetItem, mode: ProtectionMode, config: &EvalConfig) -> Result<Prepared, String> {
    let source = Image::load(&manifest.image_path(item)).map_err(|e| e.to_string())?;
    if source.fingerprint() != item.fingerprint {
        return Err(format!("image fingerprint {} does not match manifest", source.fingerprint()));
    }
    let captured = decompress(&compress(&source, config.quality).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (w, h) = (captured.width(), captured.height());
    let boxes = match mode {
        ProtectionMode::OracleGuided => load_annotated_boxes(item, w, h).map_err(|e| e.to_string())?.boxes,
        _ => config.detector.detect(&item.id, &captured).map_err(|e| e.to_string())?.boxes,
    };
    let (forwarded, mask_pixels) = match mode {
        ProtectionMode::NoObfuscation => (captured.clone(), 0),
        _ => {
            let params = config.params.for_frame(&item.id);
            let mask = build_mask(&boxes, w, h, params.pad).count_ones() as u64;
            (obfuscate(&captured, &boxes, &params).map_err(|e| e.to_string())?, mask)
        }
    };
    Ok(Prepared { captured, forwarded, boxes, mask_pixels })
}

fn leakage_pair(backend: &dyn VlmBackend, id: &str, p: &Prepared) -> Result<Option<LeakagePair>, String> {
    let ask = |img: &Image| -> Result<Vec<String>, String> {
        let png = encode_png(img).map_err(|e| e.to_string())?;
        backend.complete(&extract_prompt(png)).map(|r| parse_item_list(&r)).map_err(|e| e.to_string())
    };
    let original = ask(&p.captured)?;
    if original.is_empty() {
        return Ok(None);
    }
    let obfuscated = ask(&p.forwarded)?;
    Ok(Some(LeakagePair::new(id, &original, &obfuscated)))
}

fn evaluate_item(
    manifest: &Manifest,
    item: &DatasetItem,
    classifier: &dyn Classifier,
    mode: ProtectionMode,
    config: &EvalConfig,
) -> (ItemRow, Option<LeakagePair>) {
    let mut row = ItemRow::new(item);
    let p = match prepare(manifest, item, mode, config) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e);
            return (row, None);
        }
    };
    row.boxes = p.boxes.len();
    row.mask_pixels = p.mask_pixels;
    let mut errors = Vec::new();
    let ctx = ItemContext { item, captured: &p.captured, forwarded: &p.forwarded, boxes: &p.boxes };
    match classifier.classify(&ctx) {
        Ok(v) => {
            row.prediction = Some(v.risk);
            row.detail = v.detail;
        }
        Err(e) => errors.push(format!("classify: {e}")),
    }
    if let Some(probe) = &config.ocr {
        let reference = probe.read(&p.captured);
        if !reference.is_empty() {
            row.cer = cer(&reference, &probe.read(&p.forwarded)).ok();
        }
    }
    let mut pair = None;
    if let Some(backend) = &config.leakage {
        match leakage_pair(backend.as_ref(), &item.id, &p) {
            Ok(pr) => {
                row.leaked = pr.as_ref().map(LeakagePair::leaked);
                pair = pr;
            }
            Err(e) => errors.push(format!("leakage: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    (row, pair)
}

/// Evaluates every manifest item; per-item failures are recorded, never fatal.
pub fn run_evaluation(
    manifest: &Manifest,
    classifier: &dyn Classifier,
    mode: ProtectionMode,
    config: &EvalConfig,
) -> Result<Report, String> {
    config.params.validate().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let mut results: Vec<(ItemRow, Option<LeakagePair>)> = pool.install(|| {
        manifest.items.par_iter().map(|item| evaluate_item(manifest, item, classifier, mode, config)).collect()
    });
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let predictions: Vec<(String, bool)> =
        results.iter().filter_map(|(r, _)| r.prediction.map(|p| (r.id.clone(), p))).collect();
    let labels: BTreeMap<String, _> = results
        .iter()
        .filter(|(r, _)| r.prediction.is_some())
        .map(|(r, _)| (r.id.clone(), r.label))
        .collect();
    let confusion = if predictions.is_empty() { None } else { confusion(&predictions, &labels).ok() };
    let metrics = confusion.as_ref().and_then(|c| classification_metrics(c).ok());
    let cers: Vec<f64> = results.iter().filter_map(|(r, _)| r.cer).collect();
    let pairs: Vec<LeakagePair> = results.iter().filter_map(|(_, p)| p.clone()).collect();

    let items: Vec<ItemRow> = results.into_iter().map(|(r, _)| r).collect();
    Ok(Report {
        classifier: classifier.name(),
        mode,
        failed: items.iter().filter(|r| r.prediction.is_none()).count(),
        evaluated: items.len(),
        confusion,
        metrics,
        cer: if config.ocr.is_some() { mean_std(&cers) } else { None },
        plr: plr(&pairs).ok(),
        leakage_pairs: pairs.len(),
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_list_parsing() {
        assert_eq!(parse_item_list("NONE"), Vec::<String>::new());
        assert_eq!(parse_item_list("- PIN 1234\n2) card 4111\n\n* pass: tulip"), vec!["PIN 1234", "card 4111", "pass: tulip"]);
        assert_eq!(parse_item_list("2024 budget"), vec!["2024 budget"]);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in ProtectionMode::ALL {
            assert_eq!(m.as_str().parse::<ProtectionMode>().unwrap(), m);
            assert_eq!(serde_json::to_value(m).unwrap(), m.as_str());
        }
        assert!("oracle".parse::<ProtectionMode>().is_err());
    }
}
