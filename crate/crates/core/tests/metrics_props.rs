//! Metric, edit-distance, leakage and validator properties against brute-force references.

use std::collections::BTreeMap;

use proptest::prelude::*;

use privar_core::baselines::luhn_valid;
use privar_core::dataset::Label;
use privar_core::eval::{
    cer, classification_metrics, confusion, f1_score, levenshtein, matching_confusions, plr, ConfusionCounts, LeakagePair,
    ReportedRow, DATASET_TOTAL, DERIVED_NEGATIVES, DERIVED_POSITIVES, ROUNDING_TOLERANCE, RULE_BASED_ROW,
};

/// Exponential edit distance: try every operation at every step.
fn edit_distance_naive(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((ha, ta)), Some((hb, tb))) => {
            let sub = edit_distance_naive(ta, tb) + usize::from(ha != hb);
            let del = edit_distance_naive(ta, b) + 1;
            let ins = edit_distance_naive(a, tb) + 1;
            sub.min(del).min(ins)
        }
    }
}

fn short_abc() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('c')], 0..=8).prop_map(|v| v.into_iter().collect())
}

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..200, 0u64..200, 0u64..200, 0u64..200)
        .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
        .prop_map(|(tp, fp, tn, fn_)| ConfusionCounts::new(tp, fp, tn, fn_))
}

fn item_list() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec("[a-e]{1,3}", 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn levenshtein_equals_exhaustive_search(a in short_abc(), b in short_abc()) {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), edit_distance_naive(&ca, &cb));
    }

    #[test]
    fn levenshtein_is_a_metric(a in short_abc(), b in short_abc(), c in short_abc()) {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
    }

    #[test]
    fn cer_identities(r in "[a-z ]{1,20}") {
        prop_assert_eq!(cer(&r, &r).unwrap(), 0.0);
        prop_assert_eq!(cer(&r, "").unwrap(), 1.0);
    }

    #[test]
    fn metrics_are_scale_invariant(c in counts(), k in 2u64..9) {
        let scaled = ConfusionCounts::new(c.tp * k, c.fp * k, c.tn * k, c.fn_ * k);
        let (m, s) = (classification_metrics(&c).unwrap(), classification_metrics(&scaled).unwrap());
        for (x, y) in [(m.accuracy, s.accuracy), (m.precision, s.precision), (m.recall, s.recall), (m.f1, s.f1)] {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((0.0..=100.0).contains(&m.f1));
        prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-9 && m.f1 >= m.precision.min(m.recall) - 1e-9);
    }

    #[test]
    fn confusion_counts_agree_with_a_tally(preds in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let predictions: Vec<(String, bool)> = preds.iter().enumerate().map(|(i, (p, _))| (format!("i{i}"), *p)).collect();
        let labels: BTreeMap<String, Label> = preds
            .iter()
            .enumerate()
            .map(|(i, (_, l))| (format!("i{i}"), if *l { Label::Sensitive } else { Label::NonSensitive }))
            .collect();
        let c = confusion(&predictions, &labels).unwrap();
        let tally = |p: bool, l: bool| preds.iter().filter(|x| **x == (p, l)).count() as u64;
        prop_assert_eq!(c, ConfusionCounts::new(tally(true, true), tally(true, false), tally(false, false), tally(false, true)));
    }

    #[test]
    fn plr_is_monotone_under_mutation(
        pairs in proptest::collection::vec((item_list(), item_list()), 1..20),
        extra in "[a-e]{1,3}",
        pick in any::<prop::sample::Index>(),
    ) {
        let built: Vec<LeakagePair> = pairs.iter().enumerate().map(|(i, (o, b))| LeakagePair::new(&format!("p{i}"), o, b)).collect();
        let base = plr(&built).unwrap();
        let k = pick.index(built.len());

        // recovering one more item from the obfuscated side can only add leaks
        let (o, b) = &pairs[k];
        let mut grown = built.clone();
        let mut b2 = b.clone();
        b2.push(extra.clone());
        grown[k] = LeakagePair::new(&format!("p{k}"), o, &b2);
        prop_assert!(plr(&grown).unwrap() >= base);

        // emptying the obfuscated side can only remove leaks
        let mut cleared = built.clone();
        cleared[k] = LeakagePair::new::<String>(&format!("p{k}"), o, &[]);
        prop_assert!(plr(&cleared).unwrap() <= base);

        // appending a clean pair never raises the rate, a leaking one never lowers it
        let mut clean = built.clone();
        clean.push(LeakagePair::new("clean", &["x"], &["y"]));
        prop_assert!(plr(&clean).unwrap() <= base);
        let mut leaky = built.clone();
        leaky.push(LeakagePair::new("leak", &["x"], &["x"]));
        prop_assert!(plr(&leaky).unwrap() >= base);
    }
}

#[test]
fn f1_from_published_precision_recall() {
    for ((p, r), f1) in [((83.02, 86.27), 84.62), ((44.00, 8.63), 14.43)] {
        assert!((f1_score(p, r) - f1).abs() <= 0.01, "{p}/{r}");
    }
}

#[test]
fn seventeen_pairs_three_leaks() {
    let mut pairs: Vec<LeakagePair> = (0..14).map(|i| LeakagePair::new(&format!("c{i}"), &["name"], &["other"])).collect();
    for i in 0..3 {
        pairs.push(LeakagePair::new(&format!("l{i}"), &["Card 4111", "name"], &["card  4111"]));
    }
    let rate = plr(&pairs).unwrap();
    assert!((rate - 17.65).abs() < 0.005, "{rate}");
}

/// Split search written independently: scan balances, then tp from recall, fp from precision.
fn reference_search(total: u64, row: &ReportedRow) -> Vec<(u64, u64, u64, u64)> {
    let r2 = |x: f64| (x * 100.0).round() / 100.0;
    let mut out = Vec::new();
    for p in 1..total {
        let n = total - p;
        for tp in 0..=p {
            if r2(100.0 * tp as f64 / p as f64) != row.recall {
                continue;
            }
            for fp in 0..=n {
                if tp + fp == 0 {
                    continue;
                }
                let prec = 100.0 * tp as f64 / (tp + fp) as f64;
                let rec = 100.0 * tp as f64 / p as f64;
                let acc = 100.0 * (tp + n - fp) as f64 / total as f64;
                let f1 = 2.0 * prec * rec / (prec + rec);
                if r2(prec) == row.precision && r2(acc) == row.accuracy && r2(f1) == row.f1 {
                    out.push((tp, fp, n - fp, p - tp));
                }
            }
        }
    }
    out
}

#[test]
fn rule_row_split_matches_reference_search() {
    let reference = reference_search(DATASET_TOTAL, &RULE_BASED_ROW);
    assert_eq!(reference, vec![(22, 28, 149, 233)]);
    let found = matching_confusions(DATASET_TOTAL, &RULE_BASED_ROW, None, ROUNDING_TOLERANCE);
    let found: Vec<_> = found.iter().map(|c| (c.tp, c.fp, c.tn, c.fn_)).collect();
    assert_eq!(found, reference);
    assert_eq!((22 + 233, 28 + 149), (DERIVED_POSITIVES, DERIVED_NEGATIVES));
}

fn luhn_reference(mut n: u64, len: usize) -> bool {
    let mut sum = 0;
    for i in 0..len {
        let d = n % 10;
        n /= 10;
        sum += if i % 2 == 1 { (2 * d) / 10 + (2 * d) % 10 } else { d };
    }
    len >= 2 && sum % 10 == 0
}

fn digits_of(mut n: u64, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    for slot in v.iter_mut().rev() {
        *slot = (n % 10) as u8;
        n /= 10;
    }
    v
}

#[test]
fn luhn_agrees_with_arithmetic_reference() {
    for len in 1..=6 {
        for n in 0..10u64.pow(len as u32) {
            assert_eq!(luhn_valid(&digits_of(n, len)), luhn_reference(n, len), "{n:0len$}");
        }
    }
    // exactly one check digit completes any prefix
    for prefix in 0..100_000u64 {
        let valid = (0..10).filter(|c| luhn_valid(&digits_of(prefix * 10 + c, 6))).count();
        assert_eq!(valid, 1);
    }
    assert!(luhn_valid(&digits_of(4111_1111_1111_1111, 16)));
    assert!(!luhn_valid(&digits_of(4111_1111_1111_1112, 16)));
}
