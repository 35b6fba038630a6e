//! JPEG/PNG encoding plus a structural pre-scan that gives decode errors a byte offset.

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ColorType, DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{BinaryMask, Image, ImagingError};

/// Lossy JPEG encoding at `quality` (1..=100).
pub fn compress(image: &Image, quality: u8) -> Result<Vec<u8>, ImagingError> {
    if !(1..=100).contains(&quality) {
        return Err(ImagingError::Parameter(format!("quality {quality} outside 1..=100")));
    }
    let mut out = Vec::new();
    let color = color_type(image);
    JpegEncoder::new_with_quality(&mut out, quality)
        .encode(image.pixels(), image.width(), image.height(), color)
        .map_err(|e| ImagingError::Encode(e.to_string()))?;
    Ok(out)
}

pub fn encode_png(image: &Image) -> Result<Vec<u8>, ImagingError> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(image.pixels(), image.width(), image.height(), color_type(image))
        .map_err(|e| ImagingError::Encode(e.to_string()))?;
    Ok(out)
}

/// Packs the mask as a 1-bit grayscale PNG (set bits are white).
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>, ImagingError> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as u32, y as u32) {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, mask.width(), mask.height());
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc.write_header().map_err(|e| ImagingError::Encode(e.to_string()))?;
        writer.write_image_data(&packed).map_err(|e| ImagingError::Encode(e.to_string()))?;
    }
    Ok(out)
}

fn color_type(image: &Image) -> ExtendedColorType {
    if image.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    }
}

/// Decodes a JPEG or PNG stream. Alpha is dropped; gray stays gray.
pub fn decompress(bytes: &[u8]) -> Result<Image, ImagingError> {
    let format = if bytes.starts_with(&[0xFF, 0xD8]) {
        scan_jpeg(bytes)?;
        ImageFormat::Jpeg
    } else if bytes.starts_with(PNG_SIGNATURE) {
        scan_png(bytes)?;
        ImageFormat::Png
    } else {
        return Err(ImagingError::Decode { offset: 0, reason: "unrecognized stream signature".into() });
    };
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImagingError::Decode { offset: bytes.len(), reason: e.to_string() })?;
    from_dynamic(decoded)
}

fn from_dynamic(decoded: DynamicImage) -> Result<Image, ImagingError> {
    let gray = matches!(
        decoded.color(),
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16
    );
    if gray {
        let buf = decoded.to_luma8();
        Image::new(buf.width(), buf.height(), 1, buf.into_raw())
    } else {
        let buf = decoded.to_rgb8();
        Image::new(buf.width(), buf.height(), 3, buf.into_raw())
    }
}

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

fn truncated(offset: usize, what: &str) -> ImagingError {
    ImagingError::Decode { offset, reason: format!("truncated stream: {what}") }
}

/// Walks JPEG marker segments up to EOI.
fn scan_jpeg(bytes: &[u8]) -> Result<(), ImagingError> {
    let n = bytes.len();
    let mut pos = 2;
    loop {
        if pos >= n {
            return Err(truncated(n, "missing EOI marker"));
        }
        if bytes[pos] != 0xFF {
            return Err(ImagingError::Decode { offset: pos, reason: format!("expected marker, found 0x{:02X}", bytes[pos]) });
        }
        // fill bytes
        while pos + 1 < n && bytes[pos + 1] == 0xFF {
            pos += 1;
        }
        if pos + 1 >= n {
            return Err(truncated(n, "dangling marker prefix"));
        }
        let marker = bytes[pos + 1];
        match marker {
            0xD9 => return Ok(()),
            0x01 | 0xD0..=0xD7 => pos += 2,
            _ => {
                if pos + 4 > n {
                    return Err(truncated(pos, "segment length"));
                }
                let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
                if len < 2 || pos + 2 + len > n {
                    return Err(truncated(pos, "segment body"));
                }
                pos += 2 + len;
                if marker == 0xDA {
                    // entropy-coded data runs until the next non-stuffed, non-RST marker
                    loop {
                        if pos + 1 >= n {
                            return Err(truncated(n, "entropy-coded data"));
                        }
                        if bytes[pos] == 0xFF {
                            let next = bytes[pos + 1];
                            if next != 0x00 && !(0xD0..=0xD7).contains(&next) && next != 0xFF {
                                break;
                            }
                        }
                        pos += 1;
                    }
                }
            }
        }
    }
}

fn scan_png(bytes: &[u8]) -> Result<(), ImagingError> {
    let n = bytes.len();
    let mut pos = PNG_SIGNATURE.len();
    loop {
        if pos + 8 > n {
            return Err(truncated(pos.min(n), "missing IEND chunk"));
        }
        let len = u32::from_be_bytes([bytes[pos], bytes[pos + 1], bytes[pos + 2], bytes[pos + 3]]) as usize;
        let kind = &bytes[pos + 4..pos + 8];
        if pos + 12 + len > n {
            return Err(truncated(pos, "chunk body"));
        }
        if kind == b"IEND" {
            return Ok(());
        }
        pos += 12 + len;
    }
}
