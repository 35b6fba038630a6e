//! The bundled fixtures regenerate byte for byte and evaluate as expected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use privar_core::assessment::{MockBackend, ScenarioTable};
use privar_core::baselines::{OcrSource, RuleBasedClassifier, RuleSet, StagedClassifier};
use privar_core::dataset::Manifest;
use privar_core::eval::{run_evaluation, EvalConfig, OcrProbe, ProtectionMode};
use privar_core::synth::{generate, mini_specs, password_note_specs, FixtureConfig};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn assert_same_tree(fresh: &Path, shipped: &Path) {
    let rel = |root: &Path, v: Vec<PathBuf>| -> Vec<PathBuf> { v.into_iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect() };
    let a = rel(fresh, files(fresh));
    let b = rel(shipped, files(shipped));
    assert_eq!(a, b);
    for f in a {
        assert!(std::fs::read(fresh.join(&f)).unwrap() == std::fs::read(shipped.join(&f)).unwrap(), "{} differs", f.display());
    }
}

#[test]
fn mini_fixture_regenerates_identically() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &mini_specs(), &FixtureConfig::default()).unwrap();
    assert_same_tree(dir.path(), &bundled("mini"));
}

#[test]
fn password_fixture_regenerates_identically() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &password_note_specs(), &FixtureConfig::default()).unwrap();
    assert_same_tree(dir.path(), &bundled("password-notes"));
}

fn mock(m: &Manifest) -> Arc<MockBackend> {
    Arc::new(MockBackend::new(ScenarioTable::load(&m.sidecar(&m.sidecars.scenarios).unwrap()).unwrap()))
}

#[test]
fn protection_modes_on_the_mini_fixture() {
    let m = Manifest::load(&bundled("mini").join("manifest.json")).unwrap();
    let backend = mock(&m);
    let classifier = StagedClassifier { backend: backend.clone() };
    let config = EvalConfig { workers: 4, ocr: Some(OcrProbe::default()), leakage: Some(backend), ..Default::default() };
    let run = |mode| run_evaluation(&m, &classifier, mode, &config).unwrap();
    let (privar, oracle, open) = (run(ProtectionMode::Privar), run(ProtectionMode::OracleGuided), run(ProtectionMode::NoObfuscation));
    for r in [&privar, &oracle, &open] {
        assert_eq!(r.failed, 0, "{:?}", r.items.iter().filter_map(|i| i.error.clone()).collect::<Vec<_>>());
        assert_eq!(r.evaluated, 12);
    }
    // oracle masks cover only annotated lines, so they are never larger than the detector's union
    let area = |r: &privar_core::eval::Report| r.items.iter().map(|i| i.mask_pixels).sum::<u64>();
    assert!(area(&oracle) < area(&privar));
    assert_eq!(open.plr, Some(100.0));
    assert_eq!(oracle.plr, Some(0.0));
    let p = privar.plr.unwrap();
    assert!((p - 100.0 / 7.0).abs() < 1e-9, "{p}");
    assert_eq!(privar.items.iter().filter(|i| i.leaked == Some(true)).map(|i| i.id.as_str()).collect::<Vec<_>>(), ["bedroom-03"]);
    let cer_open = open.cer.unwrap().mean;
    assert!(cer_open < 0.05, "{cer_open}");
    assert!(privar.cer.unwrap().mean > 0.5);
}

#[test]
fn password_notes_separate_rules_from_staged_assessment() {
    let m = Manifest::load(&bundled("password-notes").join("manifest.json")).unwrap();
    let config = EvalConfig::default();
    let rules = RuleBasedClassifier { rules: RuleSet::standard(), source: OcrSource::Transcript };
    let rule_report = run_evaluation(&m, &rules, ProtectionMode::Privar, &config).unwrap();
    let staged = StagedClassifier { backend: mock(&m) };
    let staged_report = run_evaluation(&m, &staged, ProtectionMode::Privar, &config).unwrap();
    assert_eq!(rule_report.metrics.unwrap().recall, 0.0);
    assert_eq!(staged_report.metrics.unwrap().recall, 100.0);
}
