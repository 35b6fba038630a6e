//! Comparison detectors and the classifier interface shared with the staged assessment.

mod extract;
mod objects;
mod rules;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use extract::{extract_text, reading_order, ExtractError, OcrSource, RecordedOcr};
pub use objects::{
    object_recognition_classify, RecordedDetection, RecordedDetectionError, RecordedDetections, DEFAULT_CONFIDENCE,
    DEFAULT_SENSITIVE_CLASSES,
};
pub use rules::{luhn_valid, rule_based_classify, standard_rules, PatternRule, RuleError, RuleMatch, RuleSet, RuleVerdict, Validator};

use crate::assessment::{
    assess, caption_prompt, caption_verdict_prompt, parse_verdict, AssessError, BackendError, Stage, VlmBackend,
};
use crate::dataset::DatasetItem;
use crate::imaging::{encode_png, BoundingBox, Image, ImagingError};

/// Everything a classifier may look at for one dataset item.
#[derive(Clone, Copy, Debug)]
pub struct ItemContext<'a> {
    pub item: &'a DatasetItem,
    /// The frame as received at the edge (after device compression).
    pub captured: &'a Image,
    /// The frame as it would leave the edge (obfuscated unless protection is off).
    pub forwarded: &'a Image,
    /// Text boxes used for obfuscation.
    pub boxes: &'a [BoundingBox],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub risk: bool,
    /// Short human-readable trace of why.
    pub detail: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub trait Classifier: Send + Sync {
    fn name(&self) -> String;
    fn classify(&self, ctx: &ItemContext<'_>) -> Result<Verdict, ClassifyError>;
}

/// The staged scene/topic/risk assessment over the forwarded frame.
pub struct StagedClassifier {
    pub backend: Arc<dyn VlmBackend>,
}

impl Classifier for StagedClassifier {
    fn name(&self) -> String {
        format!("privar[{}]", self.backend.id())
    }

    fn classify(&self, ctx: &ItemContext<'_>) -> Result<Verdict, ClassifyError> {
        let a = assess(&ctx.item.id, ctx.forwarded, ctx.boxes, self.backend.as_ref())?;
        Ok(Verdict { risk: a.risk, detail: a.risk_rationale })
    }
}

/// Pattern rules over text extracted from the captured frame.
pub struct RuleBasedClassifier {
    pub rules: RuleSet,
    pub source: OcrSource,
}

impl Classifier for RuleBasedClassifier {
    fn name(&self) -> String {
        format!("rule-based[{}]", self.source.name())
    }

    fn classify(&self, ctx: &ItemContext<'_>) -> Result<Verdict, ClassifyError> {
        let text = extract_text(ctx.item, ctx.captured, &self.source)?;
        let v = rule_based_classify(&text, &self.rules);
        let detail = v.matches.iter().map(|m| format!("{}:{}", m.rule, m.span)).collect::<Vec<_>>().join("; ");
        Ok(Verdict { risk: v.risk, detail })
    }
}

pub struct ObjectRecognitionClassifier {
    pub detections: RecordedDetections,
    pub sensitive_classes: Vec<String>,
    pub threshold: f64,
}

impl ObjectRecognitionClassifier {
    pub fn new(detections: RecordedDetections) -> Self {
        Self {
            detections,
            sensitive_classes: DEFAULT_SENSITIVE_CLASSES.iter().map(|s| s.to_string()).collect(),
            threshold: DEFAULT_CONFIDENCE,
        }
    }
}

impl Classifier for ObjectRecognitionClassifier {
    fn name(&self) -> String {
        "object-recognition".into()
    }

    fn classify(&self, ctx: &ItemContext<'_>) -> Result<Verdict, ClassifyError> {
        let dets = self.detections.for_frame(&ctx.item.id);
        let risk = object_recognition_classify(dets, &self.sensitive_classes, self.threshold);
        let detail = dets
            .iter()
            .filter(|d| d.confidence >= self.threshold)
            .map(|d| format!("{}@{:.2}", d.class_label, d.confidence))
            .collect::<Vec<_>>()
            .join("; ");
        Ok(Verdict { risk, detail })
    }
}

/// Captions the obfuscated frame with `vlm`, then asks `llm` for a verdict from the caption text alone.
pub fn caption_then_classify(
    obfuscated: &Image,
    vlm: &dyn VlmBackend,
    llm: &dyn VlmBackend,
) -> Result<(bool, String), ClassifyError> {
    let backend_err = |stage: Stage| move |source: BackendError| AssessError::Backend { stage, source };
    let caption = vlm.complete(&caption_prompt(encode_png(obfuscated)?)).map_err(backend_err(Stage::Caption))?;
    let raw = llm.complete(&caption_verdict_prompt(&caption)).map_err(backend_err(Stage::CaptionVerdict))?;
    let (risk, _) = parse_verdict(&raw).map_err(|_| AssessError::Parse { stage: Stage::CaptionVerdict, raw })?;
    Ok((risk, caption))
}

pub struct CaptionClassifier {
    pub vlm: Arc<dyn VlmBackend>,
    pub llm: Arc<dyn VlmBackend>,
}

impl Classifier for CaptionClassifier {
    fn name(&self) -> String {
        format!("scene-captioning[{}+{}]", self.vlm.id(), self.llm.id())
    }

    fn classify(&self, ctx: &ItemContext<'_>) -> Result<Verdict, ClassifyError> {
        let (risk, caption) = caption_then_classify(ctx.forwarded, self.vlm.as_ref(), self.llm.as_ref())?;
        Ok(Verdict { risk, detail: caption })
    }
}
