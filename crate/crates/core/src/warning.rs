//! Warning overlays drawn into frames, flashing on a fixed schedule.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assessment::RiskAssessment;
use crate::font::{draw_text, text_size};
use crate::imaging::{BoundingBox, Image, ImagingError};

pub const WARNING_TEXT: &str = "PRIVACY WARNING!";
pub const RED: [u8; 3] = [255, 0, 0];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const OUTLINE_PX: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningMode {
    CenterScreen,
    TopScreen,
    RegionOverlay,
}

impl WarningMode {
    pub const ALL: [WarningMode; 3] = [WarningMode::CenterScreen, WarningMode::TopScreen, WarningMode::RegionOverlay];

    pub fn as_str(self) -> &'static str {
        match self {
            WarningMode::CenterScreen => "center-screen",
            WarningMode::TopScreen => "top-screen",
            WarningMode::RegionOverlay => "region-overlay",
        }
    }
}

impl FromStr for WarningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        WarningMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown warning mode {s:?} (expected center-screen, top-screen or region-overlay)"))
    }
}

/// On/off blinking: visible for `on_s` at the start of every `cycle_s`, for `total_s` overall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlashSchedule {
    pub cycle_s: f64,
    pub on_s: f64,
    pub total_s: f64,
}

impl Default for FlashSchedule {
    fn default() -> Self {
        Self { cycle_s: 2.0, on_s: 1.0, total_s: 6.0 }
    }
}

impl FlashSchedule {
    pub fn validate(&self) -> Result<(), WarningError> {
        let cycles = self.total_s / self.cycle_s;
        let ok = self.cycle_s > 0.0
            && (0.0..=self.cycle_s).contains(&self.on_s)
            && self.total_s >= 0.0
            && (cycles - cycles.round()).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(WarningError::Schedule(*self))
        }
    }
}

/// Whether the warning shows at `t` seconds after the positive assessment.
pub fn flash_visible(t: f64, schedule: &FlashSchedule) -> bool {
    t >= 0.0 && t < schedule.total_s && t.rem_euclid(schedule.cycle_s) < schedule.on_s
}

#[derive(Debug, thiserror::Error)]
pub enum WarningError {
    #[error("frame {0} was assessed as not risky; no warning to render")]
    NoRisk(String),
    #[error("invalid flash schedule {0:?}")]
    Schedule(FlashSchedule),
    #[error("fps must be positive and finite, got {0}")]
    Fps(f64),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// Largest text scale whose line fits in 60% of the frame width.
fn text_scale(frame_w: u32) -> u32 {
    let (w1, _) = text_size(WARNING_TEXT, 1);
    (frame_w * 3 / 5 / w1).max(1)
}

/// Rectangles a mode may paint on a `w`×`h` frame. Pixels outside them are never touched.
pub fn warning_geometry(mode: WarningMode, width: u32, height: u32, regions: &[BoundingBox]) -> Vec<BoundingBox> {
    let scale = text_scale(width);
    let (tw, th) = text_size(WARNING_TEXT, scale);
    let clip = |x: i64, y: i64, w: u32, h: u32| -> Option<BoundingBox> {
        let (x0, y0) = (x.max(0), y.max(0));
        let x1 = (x + i64::from(w)).min(i64::from(width));
        let y1 = (y + i64::from(h)).min(i64::from(height));
        (x1 > x0 && y1 > y0).then(|| BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
    };
    match mode {
        WarningMode::CenterScreen => {
            let pad = 4 * scale;
            let (bw, bh) = (tw + 2 * pad, th + 2 * pad);
            let x = (i64::from(width) - i64::from(bw)) / 2;
            let y = (i64::from(height) - i64::from(bh)) / 2;
            clip(x, y, bw, bh).into_iter().collect()
        }
        WarningMode::TopScreen => {
            let x = (i64::from(width) - i64::from(tw)) / 2;
            clip(x, i64::from(2 * scale), tw, th).into_iter().collect()
        }
        WarningMode::RegionOverlay => regions
            .iter()
            .filter_map(|r| r.clamp_to(width, height))
            .flat_map(|r| {
                let t = OUTLINE_PX.min(r.w).min(r.h);
                [
                    BoundingBox::new(r.x, r.y, r.w, t),
                    BoundingBox::new(r.x, r.bottom() - t, r.w, t),
                    BoundingBox::new(r.x, r.y, t, r.h),
                    BoundingBox::new(r.right() - t, r.y, t, r.h),
                ]
            })
            .collect(),
    }
}

fn fill(img: &mut Image, r: &BoundingBox, color: &[u8]) {
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            img.set_pixel(x, y, color);
        }
    }
}

/// Draws the warning for `mode` when the schedule is in its on phase at `t`.
/// Off-phase frames come back unchanged.
pub fn render_warning(
    frame: &Image,
    assessment: &RiskAssessment,
    mode: WarningMode,
    t: f64,
    schedule: &FlashSchedule,
) -> Result<Image, WarningError> {
    if !assessment.risk {
        return Err(WarningError::NoRisk(assessment.frame_id.clone()));
    }
    let mut out = frame.clone();
    if !flash_visible(t, schedule) {
        return Ok(out);
    }
    let (w, h) = (frame.width(), frame.height());
    let scale = text_scale(w);
    let (tw, th) = text_size(WARNING_TEXT, scale);
    let geometry = warning_geometry(mode, w, h, &assessment.regions);
    match mode {
        WarningMode::CenterScreen => {
            if let Some(block) = geometry.first() {
                fill(&mut out, block, &RED);
                let x = i64::from(block.x) + (i64::from(block.w) - i64::from(tw)) / 2;
                let y = i64::from(block.y) + (i64::from(block.h) - i64::from(th)) / 2;
                draw_text(&mut out, x, y, WARNING_TEXT, scale, &WHITE);
            }
        }
        WarningMode::TopScreen => {
            let x = (i64::from(w) - i64::from(tw)) / 2;
            draw_text(&mut out, x, i64::from(2 * scale), WARNING_TEXT, scale, &RED);
        }
        WarningMode::RegionOverlay => {
            for band in &geometry {
                fill(&mut out, band, &RED);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFrame {
    pub file: String,
    pub index: usize,
    pub t: f64,
    pub visible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub frame_id: String,
    pub mode: WarningMode,
    pub fps: f64,
    pub schedule: FlashSchedule,
    pub frames: Vec<SequenceFrame>,
}

/// Renders the whole flash episode at `fps` into `frame_%04d.png` files plus `frames.json`.
pub fn write_sequence(
    dir: &Path,
    frame: &Image,
    assessment: &RiskAssessment,
    mode: WarningMode,
    fps: f64,
    schedule: &FlashSchedule,
) -> Result<SequenceManifest, WarningError> {
    schedule.validate()?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(WarningError::Fps(fps));
    }
    if !assessment.risk {
        return Err(WarningError::NoRisk(assessment.frame_id.clone()));
    }
    let io = |p: &Path| {
        let p: PathBuf = p.to_path_buf();
        move |e| WarningError::Io(p.display().to_string(), e)
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let count = (schedule.total_s * fps).ceil() as usize;
    let mut frames = Vec::with_capacity(count);
    for index in 0..count {
        let t = index as f64 / fps;
        let img = render_warning(frame, assessment, mode, t, schedule)?;
        let file = format!("frame_{index:04}.png");
        img.save_png(&dir.join(&file))?;
        frames.push(SequenceFrame { file, index, t, visible: flash_visible(t, schedule) });
    }
    let manifest = SequenceManifest { frame_id: assessment.frame_id.clone(), mode, fps, schedule: *schedule, frames };
    let path = dir.join("frames.json");
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, body).map_err(io(&path))?;
    Ok(manifest)
}
