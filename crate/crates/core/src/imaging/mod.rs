//! Pixel operations: codec round-trip, Gaussian blur, elastic warp, masking and
//! the obfuscation composite. Everything here is a pure function of its inputs.

mod blur;
mod codec;
mod elastic;
mod mask;
mod obfuscate;
mod raster;

pub use blur::{gaussian_blur, gaussian_kernel, reflect};
pub use codec::{compress, decompress, encode_mask_png, encode_png};
pub use elastic::{displacement_field, elastic_deform, unit_noise, DisplacementField, FIELD_SIGMA};
pub use mask::{build_mask, BinaryMask};
pub use obfuscate::{
    frame_seed, obfuscate, obfuscate_with_mask, ObfuscationParams, DEFAULT_BETA, DEFAULT_PAD, DEFAULT_SIGMA,
};
pub use raster::{BoundingBox, Image};

/// Default JPEG quality used at capture time.
pub const DEFAULT_QUALITY: u8 = 75;

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("invalid image dimensions {width}x{height}")]
    Dimensions { width: u32, height: u32 },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(u8),
    #[error("pixel buffer holds {actual} samples, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },
    #[error("encode error: {0}")]
    Encode(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
