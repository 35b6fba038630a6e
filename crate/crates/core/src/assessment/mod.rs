//! Three-stage assessment of an obfuscated frame: scene description, topic
//! inference for the hidden text, then a binary privacy verdict. Each stage is
//! one backend call whose output is threaded into the next prompt.

mod backend;
mod prompts;

use serde::{Deserialize, Serialize};

pub use backend::{
    prompt_key, BackendError, MockBackend, MockScenario, Rationales, RemoteBackend, RemoteConfig, RemoteRequest,
    ReplayBackend, ScenarioTable, ScenarioTableError, TranscriptEntry, VlmBackend, SENSITIVE_CAPTION_KEYWORDS,
};
pub use prompts::{
    build_cot_prompts, caption_prompt, caption_verdict_prompt, extract_prompt, CotPromptBuilder, CotStagePrompt,
    RegionDescriptor, Stage, NO_REGIONS_CLAUSE, PROMPT_VERSION,
};

use crate::imaging::{BoundingBox, Image, ImagingError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub frame_id: String,
    pub scene_label: String,
    pub scene_rationale: String,
    pub topic_inference: String,
    pub risk: bool,
    pub risk_rationale: String,
    /// The boxes submitted with the request, in submission order.
    pub regions: Vec<BoundingBox>,
    pub backend_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AssessError {
    #[error("{stage} stage: {source}")]
    Backend {
        stage: Stage,
        #[source]
        source: BackendError,
    },
    #[error("{stage} stage: unparseable reply {raw:?}")]
    Parse { stage: Stage, raw: String },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

impl AssessError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            AssessError::Backend { stage, .. } | AssessError::Parse { stage, .. } => Some(*stage),
            AssessError::Imaging(_) => None,
        }
    }
}

const SEPARATORS: &[&str] = &[" — ", " – ", " - ", "—", "–", ":"];

/// Finds the first line starting with `KEY:` (case-insensitive). Returns the
/// token value (up to the first separator) and the remaining text.
fn tagged_line(text: &str, key: &str) -> Option<(String, String)> {
    let lines: Vec<&str> = text.lines().collect();
    let prefix = format!("{}:", key.to_ascii_uppercase());
    for (i, line) in lines.iter().enumerate() {
        let trimmed = line.trim_start();
        let upper: String = trimmed.chars().take(prefix.len()).collect::<String>().to_ascii_uppercase();
        if upper != prefix {
            continue;
        }
        let body = trimmed[prefix.len()..].trim();
        let (value, mut rest) = match SEPARATORS.iter().filter_map(|s| body.find(s).map(|p| (p, *s))).min() {
            Some((p, sep)) => (body[..p].trim().to_string(), body[p + sep.len()..].trim().to_string()),
            None => (body.to_string(), String::new()),
        };
        let tail = lines[i + 1..].join("\n");
        let tail = tail.trim();
        if !tail.is_empty() {
            if !rest.is_empty() {
                rest.push('\n');
            }
            rest.push_str(tail);
        }
        return Some((value, rest));
    }
    None
}

fn strip_leading_separators(s: &str) -> &str {
    s.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '—' | '–' | '-' | ':' | '.' | ','))
}

/// Parses the `RISK: YES|NO` token a stage-3 reply must start a line with.
pub fn parse_verdict(raw: &str) -> Result<(bool, String), AssessError> {
    let parse_err = || AssessError::Parse { stage: Stage::Risk, raw: raw.to_string() };
    for line_start in raw.lines().map(str::trim_start) {
        let Some(head) = line_start.get(..5) else { continue };
        if !head.eq_ignore_ascii_case("RISK:") {
            continue;
        }
        let body = line_start[5..].trim_start();
        let word_end = body.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(body.len());
        let risk = match body[..word_end].to_ascii_uppercase().as_str() {
            "YES" => true,
            "NO" => false,
            _ => return Err(parse_err()),
        };
        let after_line = strip_leading_separators(&body[word_end..]).trim_end().to_string();
        let pos = raw.find(line_start).unwrap_or(0) + line_start.len();
        let tail = raw[pos..].trim();
        let rationale = match (after_line.is_empty(), tail.is_empty()) {
            (false, true) => after_line,
            (false, false) => format!("{after_line}\n{tail}"),
            (true, false) => tail.to_string(),
            (true, true) => format!("RISK: {}", if risk { "YES" } else { "NO" }),
        };
        return Ok((risk, rationale));
    }
    Err(parse_err())
}

fn non_empty(s: String, fallback: &str) -> String {
    if s.trim().is_empty() {
        fallback.trim().to_string()
    } else {
        s
    }
}

fn call(backend: &dyn VlmBackend, prompt: &CotStagePrompt) -> Result<String, AssessError> {
    let reply = backend.complete(prompt).map_err(|source| AssessError::Backend { stage: prompt.stage, source })?;
    if reply.trim().is_empty() {
        return Err(AssessError::Parse { stage: prompt.stage, raw: reply });
    }
    Ok(reply)
}

/// Runs the three stages in order against `backend`.
pub fn assess(
    frame_id: &str,
    obfuscated: &Image,
    boxes: &[BoundingBox],
    backend: &dyn VlmBackend,
) -> Result<RiskAssessment, AssessError> {
    let builder = CotPromptBuilder::new(obfuscated, boxes)?;
    assess_with(frame_id, &builder, boxes, backend)
}

/// As [`assess`], with prompts built from an already encoded frame.
pub fn assess_with(
    frame_id: &str,
    builder: &CotPromptBuilder,
    boxes: &[BoundingBox],
    backend: &dyn VlmBackend,
) -> Result<RiskAssessment, AssessError> {
    let scene_out = call(backend, &builder.scene())?;
    let topic_out = call(backend, &builder.topic(&scene_out))?;
    let risk_out = call(backend, &builder.risk(&scene_out, &topic_out))?;

    let (risk, risk_rationale) = parse_verdict(&risk_out)?;
    let (scene_label, scene_rationale) = match tagged_line(&scene_out, "SCENE") {
        Some((label, rest)) => (non_empty(label, "unspecified"), non_empty(rest, &scene_out)),
        None => ("unspecified".to_string(), scene_out.trim().to_string()),
    };
    let topic_inference = match tagged_line(&topic_out, "TOPIC") {
        Some((topic, rest)) if !rest.is_empty() => format!("{topic} — {rest}"),
        Some((topic, _)) => non_empty(topic, &topic_out),
        None => topic_out.trim().to_string(),
    };
    Ok(RiskAssessment {
        frame_id: frame_id.to_string(),
        scene_label,
        scene_rationale,
        topic_inference,
        risk,
        risk_rationale,
        regions: boxes.to_vec(),
        backend_id: backend.id(),
    })
}
