//! Random elastic warp: smoothed uniform noise displacement with bilinear backward mapping.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::blur::blur_plane;
use super::raster::FloatImage;
use super::{BinaryMask, Image, ImagingError};

/// Std-dev (pixels) of the Gaussian that smooths the raw noise fields.
pub const FIELD_SIGMA: f64 = 8.0;

/// Per-pixel displacement, row-major. Maximum magnitude equals `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DisplacementField {
    pub fn magnitude(&self, i: usize) -> f64 {
        self.dx[i].hypot(self.dy[i])
    }

    pub fn mean_magnitude(&self) -> f64 {
        let n = self.dx.len();
        (0..n).map(|i| self.magnitude(i)).sum::<f64>() / n as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.dx.len()).map(|i| self.magnitude(i)).fold(0.0, f64::max)
    }
}

/// Uniform sample in [-1, 1) from the top 53 bits of a 64-bit draw.
#[inline]
pub fn unit_noise(rng: &mut impl RngCore) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

/// Draws `dx` (all pixels, row-major) then `dy` from ChaCha8 seeded with `seed`,
/// smooths each with [`FIELD_SIGMA`], rescales to unit max magnitude, then by `beta`.
pub fn displacement_field(width: usize, height: usize, beta: f64, seed: u64) -> DisplacementField {
    let n = width * height;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_dx: Vec<f64> = (0..n).map(|_| unit_noise(&mut rng)).collect();
    let raw_dy: Vec<f64> = (0..n).map(|_| unit_noise(&mut rng)).collect();
    let mut dx = blur_plane(&raw_dx, width, height, 1, FIELD_SIGMA);
    let mut dy = blur_plane(&raw_dy, width, height, 1, FIELD_SIGMA);
    let max = (0..n).map(|i| dx[i].hypot(dy[i])).fold(0.0, f64::max);
    let scale = if max > 0.0 { beta / max } else { 0.0 };
    for v in dx.iter_mut().chain(dy.iter_mut()) {
        *v *= scale;
    }
    DisplacementField { width, height, dx, dy }
}

fn sample_bilinear(img: &FloatImage, x: f64, y: f64, out: &mut [f64]) {
    let x = x.clamp(0.0, (img.width - 1) as f64);
    let y = y.clamp(0.0, (img.height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let c = img.channels;
    let at = |xx: usize, yy: usize, ch: usize| img.data[(yy * img.width + xx) * c + ch];
    for (ch, o) in out.iter_mut().enumerate() {
        let top = at(x0, y0, ch) * (1.0 - fx) + at(x1, y0, ch) * fx;
        let bottom = at(x0, y1, ch) * (1.0 - fx) + at(x1, y1, ch) * fx;
        *o = top * (1.0 - fy) + bottom * fy;
    }
}

/// Backward warp; when `only` is given, pixels outside it keep the source value.
pub(crate) fn warp_float(src: &FloatImage, field: &DisplacementField, only: Option<&BinaryMask>) -> FloatImage {
    let mut out = src.clone();
    let c = src.channels;
    let mut px = vec![0.0; c];
    for y in 0..src.height {
        for x in 0..src.width {
            if let Some(mask) = only {
                if !mask.get(x as u32, y as u32) {
                    continue;
                }
            }
            let i = y * src.width + x;
            sample_bilinear(src, x as f64 + field.dx[i], y as f64 + field.dy[i], &mut px);
            out.data[i * c..(i + 1) * c].copy_from_slice(&px);
        }
    }
    out
}

pub(crate) fn check_beta(beta: f64) -> Result<(), ImagingError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(ImagingError::Parameter(format!("beta must be finite and non-negative, got {beta}")))
    }
}

/// Elastic deformation with maximum displacement `beta` pixels; `beta == 0` is the identity.
pub fn elastic_deform(image: &Image, beta: f64, seed: u64) -> Result<Image, ImagingError> {
    check_beta(beta)?;
    if beta == 0.0 {
        return Ok(image.clone());
    }
    let src = FloatImage::from_image(image);
    let field = displacement_field(src.width, src.height, beta, seed);
    Ok(warp_float(&src, &field, None).quantize())
}
