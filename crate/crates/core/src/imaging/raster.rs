//! 8-bit raster container shared by every pixel operation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ImagingError;

/// Row-major interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::Dimensions { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::Channels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(ImagingError::BufferLength { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, channels, pixels })
    }

    /// Image filled with one color; `value` must have `channels` entries.
    pub fn filled(width: u32, height: u32, value: &[u8]) -> Result<Self, ImagingError> {
        let channels = value.len() as u8;
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * value.len());
        for _ in 0..n {
            pixels.extend_from_slice(value);
        }
        Self::new(width, height, channels, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let i = self.index(x, y);
        &self.pixels[i..i + self.channels as usize]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, value: &[u8]) {
        let i = self.index(x, y);
        let c = self.channels as usize;
        if value.len() == c {
            self.pixels[i..i + c].copy_from_slice(value);
        } else {
            // gray value into RGB or RGB value into gray
            let v = luma(value);
            for s in &mut self.pixels[i..i + c] {
                *s = v;
            }
        }
    }

    /// Luma conversion (BT.601 weights); gray images are returned as a copy.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let pixels = self.pixels.chunks_exact(3).map(luma).collect();
        Image { width: self.width, height: self.height, channels: 1, pixels }
    }

    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let pixels = self.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        Image { width: self.width, height: self.height, channels: 3, pixels }
    }

    /// SHA-256 over a dimension header followed by the raw samples, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.width.to_le_bytes());
        hasher.update(self.height.to_le_bytes());
        hasher.update([self.channels]);
        hasher.update(&self.pixels);
        hex::encode(hasher.finalize())
    }

    pub fn load(path: &Path) -> Result<Image, ImagingError> {
        let bytes = std::fs::read(path).map_err(|e| ImagingError::Io(path.display().to_string(), e))?;
        super::codec::decompress(&bytes)
    }

    /// Writes a lossless PNG.
    pub fn save_png(&self, path: &Path) -> Result<(), ImagingError> {
        let bytes = super::codec::encode_png(self)?;
        std::fs::write(path, bytes).map_err(|e| ImagingError::Io(path.display().to_string(), e))
    }
}

fn luma(px: &[u8]) -> u8 {
    match px {
        [r, g, b] => {
            let y = 0.299 * f32::from(*r) + 0.587 * f32::from(*g) + 0.114 * f32::from(*b);
            y.round().clamp(0.0, 255.0) as u8
        }
        [v, ..] => *v,
        [] => 0,
    }
}

/// Floating-point working image; all filtering happens here and is quantized once.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FloatImage {
    pub fn from_image(img: &Image) -> Self {
        Self {
            width: img.width as usize,
            height: img.height as usize,
            channels: img.channels as usize,
            data: img.pixels.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn quantize(&self) -> Image {
        let pixels = self.data.iter().map(|&v| quantize(v)).collect();
        Image {
            width: self.width as u32,
            height: self.height as u32,
            channels: self.channels as u8,
            pixels,
        }
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.w > 0 && self.h > 0 && self.right() <= width && self.bottom() <= height
    }

    /// Intersects with the image rectangle; `None` when nothing is left.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let x0 = self.x.min(width);
        let y0 = self.y.min(height);
        let x1 = self.x.saturating_add(self.w).min(width);
        let y1 = self.y.saturating_add(self.h).min(height);
        (x1 > x0 && y1 > y0).then(|| BoundingBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        BoundingBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            u64::from(x1 - x0) * u64::from(y1 - y0)
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(Image::new(0, 4, 1, vec![]), Err(ImagingError::Dimensions { .. })));
        assert!(matches!(Image::new(2, 2, 2, vec![0; 8]), Err(ImagingError::Channels(2))));
        assert!(matches!(Image::new(2, 2, 1, vec![0; 3]), Err(ImagingError::BufferLength { .. })));
    }

    #[test]
    fn fingerprint_sensitive_to_one_pixel() {
        let a = Image::filled(8, 8, &[10, 20, 30]).unwrap();
        let mut b = a.clone();
        b.set_pixel(7, 7, &[10, 20, 31]);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }

    #[test]
    fn box_clamping_and_iou() {
        let b = BoundingBox::new(10, 10, 20, 20);
        assert_eq!(b.clamp_to(25, 100), Some(BoundingBox::new(10, 10, 15, 20)));
        assert_eq!(b.clamp_to(5, 5), None);
        assert_eq!(b.iou(&b), 1.0);
        assert_eq!(b.iou(&BoundingBox::new(40, 40, 2, 2)), 0.0);
        let half = BoundingBox::new(20, 10, 20, 20);
        assert!((b.iou(&half) - 200.0 / 600.0).abs() < 1e-12);
    }
}
