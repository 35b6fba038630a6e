//! Classification metrics, character error rate and leakage rate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::Label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub const fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("predictions and labels disagree: missing predictions for {missing:?}, unknown ids {extra:?}")]
    Coverage { missing: Vec<String>, extra: Vec<String> },
    #[error("duplicate prediction for {0}")]
    Duplicate(String),
    #[error("nothing to evaluate")]
    Empty,
    #[error("reference text is empty")]
    EmptyReference,
}

/// Binary confusion with "sensitive" as the positive class.
pub fn confusion(predictions: &[(String, bool)], labels: &BTreeMap<String, Label>) -> Result<ConfusionCounts, MetricsError> {
    let mut seen = BTreeSet::new();
    let mut extra = Vec::new();
    let mut counts = ConfusionCounts::default();
    for (id, predicted) in predictions {
        if !seen.insert(id.as_str()) {
            return Err(MetricsError::Duplicate(id.clone()));
        }
        match labels.get(id) {
            Some(label) => counts.record(*predicted, label.is_positive()),
            None => extra.push(id.clone()),
        }
    }
    let missing: Vec<String> = labels.keys().filter(|id| !seen.contains(id.as_str())).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(MetricsError::Coverage { missing, extra });
    }
    Ok(counts)
}

/// Percentages in `[0, 100]`. `degenerate` marks a zero precision or F1 denominator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn classification_metrics(c: &ConfusionCounts) -> Result<ClassificationMetrics, MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let precision = pct(c.tp, c.tp + c.fp);
    let recall = pct(c.tp, c.positives());
    Ok(ClassificationMetrics {
        accuracy: pct(c.tp + c.tn, total),
        precision,
        recall,
        f1: f1_score(precision, recall),
        degenerate: c.tp + c.fp == 0 || precision + recall == 0.0,
    })
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance divided by reference length; not clamped to 1.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64, MetricsError> {
    let n = reference.chars().count();
    if n == 0 {
        return Err(MetricsError::EmptyReference);
    }
    Ok(levenshtein(reference, hypothesis) as f64 / n as f64)
}

/// Mean and sample standard deviation (0 for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanStd { mean, std, n })
}

/// Case-folds and collapses whitespace runs to one space.
pub fn normalize_item(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Sensitive items recovered from an original/obfuscated image pair, stored normalized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakagePair {
    pub id: String,
    pub items_from_original: Vec<String>,
    pub items_from_obfuscated: Vec<String>,
}

impl LeakagePair {
    pub fn new<S: AsRef<str>>(id: &str, original: &[S], obfuscated: &[S]) -> Self {
        let norm = |v: &[S]| -> Vec<String> {
            let set: BTreeSet<String> = v.iter().map(|s| normalize_item(s.as_ref())).filter(|s| !s.is_empty()).collect();
            set.into_iter().collect()
        };
        Self { id: id.to_string(), items_from_original: norm(original), items_from_obfuscated: norm(obfuscated) }
    }

    /// True when at least one identical item was recovered from both images.
    pub fn leaked(&self) -> bool {
        self.items_from_obfuscated.iter().any(|i| self.items_from_original.contains(i))
    }
}

/// Percentage of pairs that leaked.
pub fn plr(pairs: &[LeakagePair]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let leaked = pairs.iter().filter(|p| p.leaked()).count();
    Ok(100.0 * leaked as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(spec: &[(&str, bool)]) -> BTreeMap<String, Label> {
        spec.iter()
            .map(|(id, pos)| (id.to_string(), if *pos { Label::Sensitive } else { Label::NonSensitive }))
            .collect()
    }

    fn preds(spec: &[(&str, bool)]) -> Vec<(String, bool)> {
        spec.iter().map(|(id, p)| (id.to_string(), *p)).collect()
    }

    #[test]
    fn confusion_examples() {
        let truth = [("a", true), ("b", true), ("c", false), ("d", false)];
        let l = labels(&truth);
        assert_eq!(confusion(&preds(&truth), &l).unwrap(), ConfusionCounts::new(2, 0, 2, 0));
        let inverted: Vec<_> = truth.iter().map(|(id, p)| (*id, !p)).collect();
        assert_eq!(confusion(&preds(&inverted), &l).unwrap(), ConfusionCounts::new(0, 2, 0, 2));
        match confusion(&preds(&[("a", true), ("z", true)]), &l) {
            Err(MetricsError::Coverage { missing, extra }) => {
                assert_eq!(missing, vec!["b", "c", "d"]);
                assert_eq!(extra, vec!["z"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_negative_on_reconstructed_split() {
        let mut spec: Vec<(String, bool)> = (0..255).map(|i| (format!("p{i}"), true)).collect();
        spec.extend((0..177).map(|i| (format!("n{i}"), false)));
        let l: BTreeMap<String, Label> =
            spec.iter().map(|(id, p)| (id.clone(), if *p { Label::Sensitive } else { Label::NonSensitive })).collect();
        let all_neg: Vec<(String, bool)> = spec.iter().map(|(id, _)| (id.clone(), false)).collect();
        assert_eq!(confusion(&all_neg, &l).unwrap(), ConfusionCounts::new(0, 0, 177, 255));
    }

    #[test]
    fn metric_examples() {
        assert!((f1_score(83.02, 86.27) - 84.62).abs() <= 0.01);
        assert!((f1_score(44.00, 8.63) - 14.43).abs() <= 0.01);
        let m = classification_metrics(&ConfusionCounts::new(22, 28, 149, 233)).unwrap();
        assert_eq!(format!("{:.2} {:.2} {:.2} {:.2}", m.accuracy, m.precision, m.recall, m.f1), "39.58 44.00 8.63 14.43");
        assert!(!m.degenerate);
        let d = classification_metrics(&ConfusionCounts::new(0, 0, 3, 2)).unwrap();
        assert!(d.degenerate && d.precision == 0.0 && d.f1 == 0.0);
        assert_eq!(classification_metrics(&ConfusionCounts::default()), Err(MetricsError::Empty));
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("café", "cafe"), 1);
        assert_eq!(cer("password123", "password123").unwrap(), 0.0);
        assert_eq!(cer("abcd", "").unwrap(), 1.0);
        assert_eq!(cer("ab", "xyzw").unwrap(), 2.0);
        assert_eq!(cer("", "x"), Err(MetricsError::EmptyReference));
    }

    #[test]
    fn aggregation() {
        let ms = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(ms.mean, 2.5);
        assert!((ms.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[0.7]).unwrap().std, 0.0);
        assert!(mean_std(&[]).is_none());
    }

    #[test]
    fn leakage_normalization() {
        let p = LeakagePair::new("x", &["Card  4111 1111", "PIN 1234"], &["card 4111 1111"]);
        assert_eq!(p.items_from_original, vec!["card 4111 1111", "pin 1234"]);
        assert!(p.leaked());
        let q = LeakagePair::new("y", &["pin 1234"], &["pin 1235"]);
        assert!(!q.leaked());
        assert_eq!(plr(&[p, q]).unwrap(), 50.0);
        assert_eq!(plr(&[]), Err(MetricsError::Empty));
    }
}
