//! Versioned prompt templates for the three reasoning stages and the auxiliary
//! caption / extraction prompts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::imaging::{encode_png, BoundingBox, Image, ImagingError};

pub const PROMPT_VERSION: &str = "privar-cot/1";

pub const NO_REGIONS_CLAUSE: &str = "No text regions detected in this frame.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Scene,
    Topic,
    Risk,
    /// Scene caption for the caption-then-classify baseline.
    Caption,
    /// Text-only verdict over a caption.
    CaptionVerdict,
    /// Listing of sensitive items visible in an image (leakage measurement).
    Extract,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Scene => "scene",
            Stage::Topic => "topic",
            Stage::Risk => "risk",
            Stage::Caption => "caption",
            Stage::CaptionVerdict => "caption-verdict",
            Stage::Extract => "extract",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotStagePrompt {
    pub stage: Stage,
    pub instruction_text: String,
    /// PNG bytes of the (already obfuscated) frame.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "b64_opt")]
    pub attached_image: Option<Vec<u8>>,
    pub prior_stage_outputs: Vec<String>,
}

mod b64_opt {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_some(&STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| STANDARD.decode(t).map_err(serde::de::Error::custom)).transpose()
    }
}

/// Position and size of a box as fractions of the frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionDescriptor {
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
}

impl RegionDescriptor {
    pub fn new(b: &BoundingBox, frame_w: u32, frame_h: u32) -> Self {
        let (fw, fh) = (f64::from(frame_w), f64::from(frame_h));
        Self {
            center_x: (f64::from(b.x) + f64::from(b.w) / 2.0) / fw,
            center_y: (f64::from(b.y) + f64::from(b.h) / 2.0) / fh,
            width: f64::from(b.w) / fw,
            height: f64::from(b.h) / fh,
        }
    }

    fn describe(&self) -> String {
        let horiz = match self.center_x {
            x if x < 1.0 / 3.0 => "left",
            x if x < 2.0 / 3.0 => "center",
            _ => "right",
        };
        let vert = match self.center_y {
            y if y < 1.0 / 3.0 => "upper",
            y if y < 2.0 / 3.0 => "middle",
            _ => "lower",
        };
        format!(
            "{vert} {horiz} of the frame, centered at ({:.3}, {:.3}), spanning {:.3} x {:.3} of the frame",
            self.center_x, self.center_y, self.width, self.height
        )
    }
}

fn header(stage_no: u8, title: &str) -> String {
    format!("[{PROMPT_VERSION} stage {stage_no}/3: {title}]\n")
}

fn quoted(label: &str, text: &str) -> String {
    format!("{label}:\n<<<\n{text}\n>>>\n")
}

/// Builds stage prompts for one obfuscated frame.
#[derive(Clone, Debug)]
pub struct CotPromptBuilder {
    image_png: Vec<u8>,
    regions: Vec<RegionDescriptor>,
}

impl CotPromptBuilder {
    pub fn new(obfuscated: &Image, boxes: &[BoundingBox]) -> Result<Self, ImagingError> {
        Ok(Self::from_png(encode_png(obfuscated)?, obfuscated.width(), obfuscated.height(), boxes))
    }

    pub fn from_png(image_png: Vec<u8>, width: u32, height: u32, boxes: &[BoundingBox]) -> Self {
        let regions = boxes.iter().map(|b| RegionDescriptor::new(b, width, height)).collect();
        Self { image_png, regions }
    }

    pub fn regions(&self) -> &[RegionDescriptor] {
        &self.regions
    }

    pub fn scene(&self) -> CotStagePrompt {
        let mut text = header(1, "scene description");
        text.push_str(
            "The attached image was captured by an augmented-reality headset. Regions that \
             contained text were deliberately blurred and warped before upload.\n\
             Describe the physical environment the user is in and classify it as one of: \
             office, living room, bedroom, café, kitchen, other.\n\
             Start your answer with `SCENE: <label>` followed by ` — ` and one or two sentences \
             about the setting and the objects in it.",
        );
        CotStagePrompt {
            stage: Stage::Scene,
            instruction_text: text,
            attached_image: Some(self.image_png.clone()),
            prior_stage_outputs: vec![],
        }
    }

    pub fn topic(&self, scene_output: &str) -> CotStagePrompt {
        let mut text = header(2, "text topic inference");
        text.push_str(&quoted("Scene description from the previous step", scene_output));
        if self.regions.is_empty() {
            text.push_str(NO_REGIONS_CLAUSE);
            text.push_str(
                " State what kind of text, if any, would plausibly be present in this scene.\n\
                 Start your answer with `TOPIC: none` if no text is expected, otherwise \
                 `TOPIC: <short topic>`, followed by ` — ` and your reasoning.",
            );
        } else {
            let _ = writeln!(text, "The frame contains {} obfuscated text region(s):", self.regions.len());
            for (i, r) in self.regions.iter().enumerate() {
                let _ = writeln!(text, "{}. {}", i + 1, r.describe());
            }
            text.push_str(
                "Using the scene and the objects immediately around each region (the surface the \
                 text sits on, nearby items), guess what the hidden text is probably about. \
                 For example, a small printed label on a pill bottle beside a bathroom sink probably \
                 names a medication and a dosage.\n\
                 Start your answer with `TOPIC: <short topic>` followed by ` — ` and your reasoning.",
            );
        }
        CotStagePrompt {
            stage: Stage::Topic,
            instruction_text: text,
            attached_image: Some(self.image_png.clone()),
            prior_stage_outputs: vec![scene_output.to_string()],
        }
    }

    pub fn risk(&self, scene_output: &str, topic_output: &str) -> CotStagePrompt {
        let mut text = header(3, "privacy risk assessment");
        text.push_str(&quoted("Scene description", scene_output));
        text.push_str(&quoted("Inferred text topic", topic_output));
        text.push_str(
            "Combine the inferred topic with the environment and decide whether capturing this \
             frame exposes private information about the user or bystanders.\n\
             Answer on the first line with exactly `RISK: YES` or `RISK: NO`, followed by ` — ` \
             and a one-sentence rationale.",
        );
        CotStagePrompt {
            stage: Stage::Risk,
            instruction_text: text,
            attached_image: Some(self.image_png.clone()),
            prior_stage_outputs: vec![scene_output.to_string(), topic_output.to_string()],
        }
    }
}

/// All three stage prompts, given the outputs the first two stages produced.
pub fn build_cot_prompts(
    obfuscated: &Image,
    boxes: &[BoundingBox],
    scene_output: &str,
    topic_output: &str,
) -> Result<[CotStagePrompt; 3], ImagingError> {
    let b = CotPromptBuilder::new(obfuscated, boxes)?;
    Ok([b.scene(), b.topic(scene_output), b.risk(scene_output, topic_output)])
}

pub fn caption_prompt(image_png: Vec<u8>) -> CotStagePrompt {
    CotStagePrompt {
        stage: Stage::Caption,
        instruction_text: format!(
            "[{PROMPT_VERSION} caption]\nWrite a comprehensive one-paragraph description of the \
             attached image: the setting, the objects in it and anything written or displayed."
        ),
        attached_image: Some(image_png),
        prior_stage_outputs: vec![],
    }
}

pub fn caption_verdict_prompt(caption: &str) -> CotStagePrompt {
    CotStagePrompt {
        stage: Stage::CaptionVerdict,
        instruction_text: format!(
            "[{PROMPT_VERSION} caption verdict]\n{}Based only on this description, decide whether the \
             scene exposes private information.\nAnswer on the first line with exactly `RISK: YES` or \
             `RISK: NO`, followed by ` — ` and a one-sentence rationale.",
            quoted("Scene description", caption)
        ),
        attached_image: None,
        prior_stage_outputs: vec![caption.to_string()],
    }
}

pub fn extract_prompt(image_png: Vec<u8>) -> CotStagePrompt {
    CotStagePrompt {
        stage: Stage::Extract,
        instruction_text: format!(
            "[{PROMPT_VERSION} sensitive item extraction]\nList every piece of sensitive information \
             you can read in the attached image (numbers, passwords, names, records), one item per \
             line, verbatim. Answer `NONE` if nothing sensitive is legible."
        ),
        attached_image: Some(image_png),
        prior_stage_outputs: vec![],
    }
}
