//! Per-item CSV and Markdown summary tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{ClassificationMetrics, ConfusionCounts, MeanStd};
use super::runner::ProtectionMode;
use crate::dataset::{DatasetItem, Label, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub id: String,
    pub label: Label,
    pub scene: Scene,
    pub prediction: Option<bool>,
    pub detail: String,
    pub boxes: usize,
    pub mask_pixels: u64,
    pub cer: Option<f64>,
    pub leaked: Option<bool>,
    pub error: Option<String>,
}

impl ItemRow {
    pub fn new(item: &DatasetItem) -> Self {
        Self {
            id: item.id.clone(),
            label: item.label,
            scene: item.scene,
            prediction: None,
            detail: String::new(),
            boxes: 0,
            mask_pixels: 0,
            cer: None,
            leaked: None,
            error: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub classifier: String,
    pub mode: ProtectionMode,
    pub evaluated: usize,
    pub failed: usize,
    pub confusion: Option<ConfusionCounts>,
    pub metrics: Option<ClassificationMetrics>,
    pub cer: Option<MeanStd>,
    pub plr: Option<f64>,
    pub leakage_pairs: usize,
    pub items: Vec<ItemRow>,
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

impl Report {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "label", "scene", "prediction", "correct", "boxes", "mask_pixels", "cer", "leaked", "detail", "error"])?;
        for r in &self.items {
            let correct = r.prediction.map(|p| p == r.label.is_positive());
            w.write_record([
                r.id.as_str(),
                if r.label.is_positive() { "sensitive" } else { "non-sensitive" },
                r.scene.as_str(),
                &opt_bool(r.prediction),
                &opt_bool(correct),
                &r.boxes.to_string(),
                &r.mask_pixels.to_string(),
                &r.cer.map(|c| format!("{c:.6}")).unwrap_or_default(),
                &opt_bool(r.leaked),
                r.detail.as_str(),
                r.error.as_deref().unwrap_or(""),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Evaluation: {} ({})\n", self.classifier, self.mode);
        let _ = writeln!(s, "Items: {} evaluated, {} failed.\n", self.evaluated, self.failed);
        s.push_str(&detection_table(std::slice::from_ref(self)));
        s.push('\n');
        s.push_str(&protection_table(std::slice::from_ref(self)));
        if let Some(c) = &self.confusion {
            let _ = writeln!(s, "\nConfusion: tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_);
        }
        let failures: Vec<&ItemRow> = self.items.iter().filter(|r| r.error.is_some()).collect();
        if !failures.is_empty() {
            s.push_str("\n## Failures\n\n");
            for r in failures {
                let _ = writeln!(s, "- {}: {}", r.id, r.error.as_deref().unwrap_or(""));
            }
        }
        s
    }

    /// Writes `<stem>.csv`, `<stem>.md` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let csv = self.to_csv().map_err(std::io::Error::other)?;
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)? + "\n";
        let mut written = Vec::new();
        for (ext, body) in [("csv", csv), ("md", self.to_markdown()), ("json", json)] {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Accuracy / precision / recall / F1 per report.
pub fn detection_table(reports: &[Report]) -> String {
    let mut s = String::from("| Detection method | Mode | Acc.(%) | Prec.(%) | Rec.(%) | F1(%) |\n|---|---|---|---|---|---|\n");
    for r in reports {
        let cells = match &r.metrics {
            Some(m) => {
                let flag = if m.degenerate { " (degenerate)" } else { "" };
                format!("{} | {} | {} | {}{flag}", pct(m.accuracy), pct(m.precision), pct(m.recall), pct(m.f1))
            }
            None => "n/a | n/a | n/a | n/a".into(),
        };
        let _ = writeln!(s, "| {} | {} | {cells} |", r.classifier, r.mode);
    }
    s
}

/// CER (mean ± sample std) and PLR per report.
pub fn protection_table(reports: &[Report]) -> String {
    let mut s = String::from("| Protection method | CER (%) | PLR (%) | Leakage pairs |\n|---|---|---|---|\n");
    for r in reports {
        let cer = r.cer.map(|c| format!("{}±{}", pct(100.0 * c.mean), pct(100.0 * c.std))).unwrap_or_else(|| "n/a".into());
        let plr = r.plr.map(pct).unwrap_or_else(|| "n/a".into());
        let _ = writeln!(s, "| {} | {cer} | {plr} | {} |", r.mode, r.leakage_pairs);
    }
    s
}
