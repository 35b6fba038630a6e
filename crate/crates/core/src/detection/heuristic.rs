//! Edge-density text-line detector: morphological gradient, binarization,
//! horizontal joining and connected components.

use serde::{Deserialize, Serialize};

use super::merge::merge_boxes;
use crate::imaging::{BoundingBox, Image};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "threshold")]
pub enum Binarization {
    Otsu,
    Fixed(u8),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum box area in px².
    pub min_area: u64,
    /// Largest box area as a fraction of the frame.
    pub max_area_fraction: f64,
    pub min_aspect: f64,
    pub max_aspect: f64,
    pub binarization: Binarization,
    pub merge_iou: f64,
    /// Half-width of the horizontal dilation that joins characters into lines.
    pub join_radius: u32,
    /// Minimum fraction of a component's joined bounding box that is set.
    pub min_fill: f64,
    /// Vertical edge runs taller than this (px) are object borders, not strokes, and are dropped.
    pub max_stroke: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            min_area: 64,
            max_area_fraction: 0.5,
            min_aspect: 1.2,
            max_aspect: 25.0,
            binarization: Binarization::Otsu,
            merge_iou: 0.3,
            join_radius: 8,
            min_fill: 0.45,
            max_stroke: 40,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_area < 1 {
            return Err("min_area must be at least 1".into());
        }
        if !(self.max_area_fraction > 0.0 && self.max_area_fraction <= 1.0) {
            return Err("max_area_fraction must lie in (0, 1]".into());
        }
        if !(self.min_aspect <= self.max_aspect) {
            return Err("min_aspect must not exceed max_aspect".into());
        }
        if !(0.0..=1.0).contains(&self.merge_iou) {
            return Err("merge_iou must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.min_fill) {
            return Err("min_fill must lie in [0, 1]".into());
        }
        if self.max_stroke < 3 {
            return Err("max_stroke must be at least 3".into());
        }
        Ok(())
    }
}

/// Clears every vertical run of set pixels longer than `max_run`.
fn drop_tall_runs(bits: &mut [bool], w: usize, h: usize, max_run: usize) {
    for x in 0..w {
        let mut y = 0;
        while y < h {
            if !bits[y * w + x] {
                y += 1;
                continue;
            }
            let start = y;
            while y < h && bits[y * w + x] {
                y += 1;
            }
            if y - start > max_run {
                for yy in start..y {
                    bits[yy * w + x] = false;
                }
            }
        }
    }
}

/// 3x3 dilation minus 3x3 erosion, borders clamped.
pub fn morphological_gradient(gray: &Image) -> Vec<u8> {
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let px = gray.pixels();
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut lo, mut hi) = (u8::MAX, u8::MIN);
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let v = px[yy * w + xx];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            out[y * w + x] = hi - lo;
        }
    }
    out
}

/// Otsu's threshold; foreground is `value > threshold`.
pub fn otsu_threshold(values: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0f64, 0f64);
    let mut best = (f64::MIN, 0u8);
    for t in 0..256usize {
        w0 += hist[t] as f64;
        if w0 == 0.0 {
            continue;
        }
        let w1 = total - w0;
        if w1 == 0.0 {
            break;
        }
        sum0 += t as f64 * hist[t] as f64;
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    if best.0 == f64::MIN {
        // single-valued input
        values.first().copied().unwrap_or(0)
    } else {
        best.1
    }
}

fn dilate_horizontal(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for y in 0..h {
        let row = &bits[y * w..(y + 1) * w];
        // running count of set bits in the window
        let mut prefix = vec![0usize; w + 1];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as usize;
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            out[y * w + x] = prefix[hi] > prefix[lo];
        }
    }
    out
}

struct Component {
    joined: BoundingBox,
    joined_count: u64,
    core: Option<(u32, u32, u32, u32)>,
}

/// 8-connected components of `joined`; the core extent tracks `seed` pixels only.
fn components(joined: &[bool], seed: &[bool], w: usize, h: usize) -> Vec<Component> {
    let mut label = vec![false; joined.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..joined.len() {
        if !joined[start] || label[start] {
            continue;
        }
        label[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut core: Option<(u32, u32, u32, u32)> = None;
        let mut count = 0u64;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            count += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            if seed[i] {
                let (x, y) = (x as u32, y as u32);
                core = Some(match core {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if joined[j] && !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(Component {
            joined: BoundingBox::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32),
            joined_count: count,
            core,
        });
    }
    out
}

/// Detects horizontal text lines. Deterministic; returns boxes sorted by `(y, x)`.
pub fn detect_heuristic(image: &Image, config: &DetectorConfig) -> Vec<BoundingBox> {
    let gray = image.to_gray();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let grad = morphological_gradient(&gray);
    let threshold = match config.binarization {
        Binarization::Otsu => otsu_threshold(&grad),
        Binarization::Fixed(t) => t,
    };
    let mut edges: Vec<bool> = grad.iter().map(|&g| g > threshold).collect();
    drop_tall_runs(&mut edges, w, h, config.max_stroke as usize);
    let joined = dilate_horizontal(&edges, w, h, config.join_radius as usize);
    let frame_area = (w * h) as f64;

    let mut boxes = Vec::new();
    for comp in components(&joined, &edges, w, h) {
        let Some((x0, y0, x1, y1)) = comp.core else { continue };
        let fill = comp.joined_count as f64 / comp.joined.area() as f64;
        if fill < config.min_fill {
            continue;
        }
        // the gradient straddles each stroke edge by one pixel
        let (mut bx0, mut by0, mut bx1, mut by1) = (x0, y0, x1 + 1, y1 + 1);
        if bx1 - bx0 > 2 {
            bx0 += 1;
            bx1 -= 1;
        }
        if by1 - by0 > 2 {
            by0 += 1;
            by1 -= 1;
        }
        let b = BoundingBox::new(bx0, by0, bx1 - bx0, by1 - by0);
        let aspect = f64::from(b.w) / f64::from(b.h);
        if b.area() < config.min_area
            || b.area() as f64 > config.max_area_fraction * frame_area
            || aspect < config.min_aspect
            || aspect > config.max_aspect
        {
            continue;
        }
        boxes.push(b);
    }
    merge_boxes(&boxes, config.merge_iou)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tall_runs_cleared() {
        // column 0 has a 5-run, column 1 a 2-run
        let mut bits = vec![
            true, true, //
            true, true, //
            true, false, //
            true, false, //
            true, false, //
        ];
        drop_tall_runs(&mut bits, 2, 5, 3);
        assert_eq!(bits, vec![false, true, false, true, false, false, false, false, false, false]);
    }

    #[test]
    fn blank_image_has_no_text() {
        let img = Image::filled(64, 48, &[200, 200, 200]).unwrap();
        assert!(detect_heuristic(&img, &DetectorConfig::default()).is_empty());
    }

    #[test]
    fn otsu_on_bimodal() {
        let mut v = vec![10u8; 100];
        v.extend(vec![200u8; 50]);
        let t = otsu_threshold(&v);
        assert!((10..200).contains(&t));
        assert_eq!(otsu_threshold(&[7, 7, 7]), 7);
    }

    #[test]
    fn gradient_of_step() {
        let px = vec![0, 0, 255, 255];
        let g = morphological_gradient(&Image::new(4, 1, 1, px).unwrap());
        assert_eq!(g, vec![0, 255, 255, 0]);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let bad = DetectorConfig { min_aspect: 3.0, max_aspect: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
