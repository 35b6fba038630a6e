//! Separable Gaussian low-pass filter.

use super::raster::FloatImage;
use super::{Image, ImagingError};

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Symmetric reflection (`d c b a | a b c d`), valid for any offset.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

pub(crate) fn blur_plane(data: &[f64], width: usize, height: usize, stride: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0f64; data.len()];
    for y in 0..height {
        let row = y * width;
        for x in 0..width {
            for c in 0..stride {
                let mut acc = 0f64;
                for (k, w) in kernel.iter().enumerate() {
                    let sx = reflect(x as isize + k as isize - radius, width);
                    acc += w * data[(row + sx) * stride + c];
                }
                tmp[(row + x) * stride + c] = acc;
            }
        }
    }
    let mut out = vec![0f64; data.len()];
    for y in 0..height {
        for x in 0..width {
            for c in 0..stride {
                let mut acc = 0f64;
                for (k, w) in kernel.iter().enumerate() {
                    let sy = reflect(y as isize + k as isize - radius, height);
                    acc += w * tmp[(sy * width + x) * stride + c];
                }
                out[(y * width + x) * stride + c] = acc;
            }
        }
    }
    out
}

pub(crate) fn blur_float(img: &FloatImage, sigma: f64) -> FloatImage {
    if sigma == 0.0 {
        return img.clone();
    }
    FloatImage {
        data: blur_plane(&img.data, img.width, img.height, img.channels, sigma),
        ..*img
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<(), ImagingError> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(ImagingError::Parameter(format!("sigma must be finite and non-negative, got {sigma}")))
    }
}

/// Gaussian blur with reflect borders; `sigma == 0` returns an exact copy.
pub fn gaussian_blur(image: &Image, sigma: f64) -> Result<Image, ImagingError> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    Ok(blur_float(&FloatImage::from_image(image), sigma).quantize())
}
