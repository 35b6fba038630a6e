//! Masked composite of blurred-then-warped pixels over the original frame.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::blur::{blur_float, check_sigma};
use super::elastic::{check_beta, displacement_field, warp_float};
use super::raster::{quantize, FloatImage};
use super::{build_mask, BinaryMask, BoundingBox, Image, ImagingError};

pub const DEFAULT_SIGMA: f64 = 5.0;
pub const DEFAULT_BETA: f64 = 40.0;
pub const DEFAULT_PAD: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationParams {
    /// Blur std-dev in pixels.
    pub sigma: f64,
    /// Maximum warp displacement in pixels.
    pub beta: f64,
    /// Mask dilation in pixels.
    pub pad: u32,
    pub seed: u64,
}

impl Default for ObfuscationParams {
    fn default() -> Self {
        Self { sigma: DEFAULT_SIGMA, beta: DEFAULT_BETA, pad: DEFAULT_PAD, seed: 0 }
    }
}

impl ObfuscationParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        check_sigma(self.sigma)?;
        check_beta(self.beta)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Same parameters seeded from [`frame_seed`].
    pub fn for_frame(self, frame_id: &str) -> Self {
        self.with_seed(frame_seed(frame_id))
    }
}

/// Stable per-frame seed: first eight bytes (little endian) of SHA-256(frame_id).
pub fn frame_seed(frame_id: &str) -> u64 {
    let digest = Sha256::digest(frame_id.as_bytes());
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// `out = (1 - M) * image + M * warp(blur(image, sigma), beta)`, quantized once.
pub fn obfuscate(image: &Image, boxes: &[BoundingBox], params: &ObfuscationParams) -> Result<Image, ImagingError> {
    obfuscate_with_mask(image, boxes, params).map(|(img, _)| img)
}

pub fn obfuscate_with_mask(
    image: &Image,
    boxes: &[BoundingBox],
    params: &ObfuscationParams,
) -> Result<(Image, BinaryMask), ImagingError> {
    params.validate()?;
    let mask = build_mask(boxes, image.width(), image.height(), params.pad);
    if mask.is_empty() {
        return Ok((image.clone(), mask));
    }
    let src = FloatImage::from_image(image);
    let mut filtered = blur_float(&src, params.sigma);
    if params.beta > 0.0 {
        let field = displacement_field(src.width, src.height, params.beta, params.seed);
        filtered = warp_float(&filtered, &field, Some(&mask));
    }
    let mut out = image.clone();
    let c = src.channels;
    let pixels = out.pixels_mut();
    for (i, &bit) in mask.bits().iter().enumerate() {
        if bit {
            for k in i * c..(i + 1) * c {
                pixels[k] = quantize(filtered.data[k]);
            }
        }
    }
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: u32, h: u32) -> Image {
        let px = (0..w * h * 3).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
        Image::new(w, h, 3, px).unwrap()
    }

    #[test]
    fn empty_boxes_identity() {
        let img = noise(20, 10);
        assert_eq!(obfuscate(&img, &[], &ObfuscationParams::default()).unwrap(), img);
    }

    #[test]
    fn zero_params_identity_on_full_box() {
        let img = noise(20, 10);
        let p = ObfuscationParams { sigma: 0.0, beta: 0.0, pad: 0, seed: 1 };
        assert_eq!(obfuscate(&img, &[BoundingBox::new(0, 0, 20, 10)], &p).unwrap(), img);
    }

    #[test]
    fn outside_mask_untouched() {
        let img = noise(40, 30);
        let boxes = [BoundingBox::new(5, 5, 10, 6)];
        let p = ObfuscationParams::default().with_seed(3);
        let (out, mask) = obfuscate_with_mask(&img, &boxes, &p).unwrap();
        for y in 0..30 {
            for x in 0..40 {
                if !mask.get(x, y) {
                    assert_eq!(out.pixel(x, y), img.pixel(x, y));
                }
            }
        }
        assert_ne!(out, img);
    }

    #[test]
    fn invalid_params() {
        let img = noise(4, 4);
        let p = ObfuscationParams { sigma: -1.0, ..Default::default() };
        assert!(obfuscate(&img, &[], &p).is_err());
    }

    #[test]
    fn frame_seed_is_stable() {
        assert_eq!(frame_seed("frame-1"), frame_seed("frame-1"));
        assert_ne!(frame_seed("frame-1"), frame_seed("frame-2"));
    }
}
