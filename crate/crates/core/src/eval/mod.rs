//! Evaluation harness: metrics, split reconstruction, the manifest runner and reports.

mod metrics;
mod report;
mod runner;
mod split;

pub use metrics::*;
pub use report::{detection_table, protection_table, ItemRow, Report};
pub use runner::{parse_item_list, run_evaluation, EvalConfig, OcrProbe, ProtectionMode};
pub use split::*;
