//! Privacy-aware capture pipeline: text-region obfuscation at the edge, staged
//! risk assessment in the cloud, comparison baselines and an evaluation harness.

pub mod imaging;
pub mod dataset;
pub mod detection;
pub mod font;
pub mod ocr;
pub mod assessment;
pub mod baselines;
pub mod eval;
pub mod warning;
pub mod synth;
