//! Template-matching reader for text rendered with the embedded bitmap font.
//!
//! Stands in for an OCR engine on synthetic fixtures: it recovers clean text
//! almost perfectly and degrades the way a real reader does once strokes are
//! blurred or displaced.

use crate::font::{charset, glyph, glyph_bit, ADVANCE, GLYPH_H, GLYPH_W};
use crate::imaging::{BoundingBox, Image};

#[derive(Clone, Copy, Debug)]
pub struct GlyphReader {
    /// Largest Hamming distance (out of 35 font pixels) accepted as a match.
    pub max_mismatch: u32,
    /// Minimum max-min luma spread for a region to be read at all.
    pub min_contrast: u8,
}

impl Default for GlyphReader {
    fn default() -> Self {
        Self { max_mismatch: 3, min_contrast: 60 }
    }
}

struct Region {
    w: usize,
    h: usize,
    ink: Vec<bool>,
}

impl Region {
    fn at(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.ink[y as usize * self.w + x as usize]
    }
}

impl GlyphReader {
    /// Reads the single text line inside `region`. Unmatched cells are dropped.
    pub fn read_region(&self, image: &Image, region: BoundingBox) -> String {
        let Some(region) = region.clamp_to(image.width(), image.height()) else {
            return String::new();
        };
        let gray = image.to_gray();
        let (w, h) = (region.w as usize, region.h as usize);
        let mut values = Vec::with_capacity(w * h);
        for y in region.y..region.bottom() {
            for x in region.x..region.right() {
                values.push(gray.pixel(x, y)[0]);
            }
        }
        let (lo, hi) = values.iter().fold((u8::MAX, 0u8), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi.saturating_sub(lo) < self.min_contrast {
            return String::new();
        }
        let threshold = (u16::from(lo) + u16::from(hi)) / 2;
        let mut ink: Vec<bool> = values.iter().map(|&v| u16::from(v) < threshold).collect();
        // ink is the minority class, so light text on a dark ground reads too
        if ink.iter().filter(|&&b| b).count() * 2 > ink.len() {
            ink.iter_mut().for_each(|b| *b = !*b);
        }
        let region = Region { w, h, ink };

        let Some((x0, y0, x1, y1)) = ink_extent(&region) else {
            return String::new();
        };
        let scale = stroke_width(&region).max(1) as i64;
        let cell = i64::from(ADVANCE) * scale;

        let mut best: Option<(u64, String)> = None;
        for kx in 0..3i64 {
            for ky in 0..i64::from(GLYPH_H) {
                let ox = x0 as i64 - kx * scale;
                let oy = y0 as i64 - ky * scale;
                if oy + i64::from(GLYPH_H) * scale < y1 as i64 + 1 {
                    continue;
                }
                let cells = ((x1 as i64 + 1 - ox) + cell - 1) / cell;
                let mut cost = 0u64;
                let mut text = String::new();
                for c in 0..cells {
                    let bits = sample_cell(&region, ox + c * cell, oy, scale);
                    match self.best_glyph(&bits) {
                        Some((ch, d)) => {
                            cost += u64::from(d);
                            text.push(ch);
                        }
                        None => cost += u64::from(GLYPH_W * GLYPH_H),
                    }
                }
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, text));
                }
            }
        }
        best.map(|(_, t)| t.trim().to_string()).unwrap_or_default()
    }

    /// Reads each region and joins the lines with `\n` in `(y, x)` order.
    pub fn read_regions(&self, image: &Image, regions: &[BoundingBox]) -> String {
        let mut ordered = regions.to_vec();
        ordered.sort_by_key(|b| (b.y, b.x));
        ordered.iter().map(|b| self.read_region(image, *b)).collect::<Vec<_>>().join("\n")
    }

    fn best_glyph(&self, bits: &[bool; 35]) -> Option<(char, u32)> {
        let mut best: Option<(char, u32)> = None;
        for ch in charset() {
            let cols = glyph(ch).expect("charset is printable");
            let mut d = 0;
            for col in 0..GLYPH_W {
                for row in 0..GLYPH_H {
                    d += u32::from(glyph_bit(&cols, col, row) != bits[(row * GLYPH_W + col) as usize]);
                }
            }
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((ch, d));
            }
        }
        best.filter(|&(_, d)| d <= self.max_mismatch)
    }
}

fn ink_extent(r: &Region) -> Option<(usize, usize, usize, usize)> {
    let mut ext: Option<(usize, usize, usize, usize)> = None;
    for y in 0..r.h {
        for x in 0..r.w {
            if r.ink[y * r.w + x] {
                ext = Some(match ext {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
        }
    }
    ext
}

/// Most frequent horizontal ink run length; equals the font scale for clean text.
fn stroke_width(r: &Region) -> usize {
    let mut hist = vec![0usize; r.w + 1];
    for y in 0..r.h {
        let mut run = 0;
        for x in 0..=r.w {
            if x < r.w && r.ink[y * r.w + x] {
                run += 1;
            } else if run > 0 {
                hist[run] += 1;
                run = 0;
            }
        }
    }
    hist.iter().enumerate().max_by_key(|&(len, &count)| (count, std::cmp::Reverse(len))).map_or(1, |(len, _)| len)
}

fn sample_cell(r: &Region, ox: i64, oy: i64, scale: i64) -> [bool; 35] {
    let mut bits = [false; 35];
    let half = scale * scale / 2;
    for row in 0..i64::from(GLYPH_H) {
        for col in 0..i64::from(GLYPH_W) {
            let mut count = 0;
            for dy in 0..scale {
                for dx in 0..scale {
                    count += i64::from(r.at(ox + col * scale + dx, oy + row * scale + dy));
                }
            }
            bits[(row * i64::from(GLYPH_W) + col) as usize] = count > half;
        }
    }
    bits
}
