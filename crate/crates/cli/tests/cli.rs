//! Exercises the `privar` binary: exit codes, outputs and the no-network guarantee of mock runs.

use std::io::Read;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_privar"));
    for k in ["PRIVAR_SIGMA", "PRIVAR_BETA", "PRIVAR_PAD", "PRIVAR_QUALITY", "PRIVAR_BACKEND", "PRIVAR_DETECTOR", "PRIVAR_SCENARIOS"] {
        c.env_remove(k);
    }
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\nstdout: {}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn obfuscate_writes_an_image() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.png");
    let input = fixture("mini/images/office-01.png");
    let o = bin().args(["obfuscate", "--in", p(&input), "--out", p(&out), "--sigma", "5", "--beta", "40"]).output().unwrap();
    ok(&o);
    let a = image_bytes(&input);
    let b = image_bytes(&out);
    assert_eq!(a.len(), b.len());
    assert_ne!(a, b);
}

fn image_bytes(path: &Path) -> Vec<u8> {
    privar_core::imaging::decompress(&std::fs::read(path).unwrap()).unwrap().into_pixels()
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.png");
    let input = fixture("mini/images/office-01.png");
    let o = bin().args(["obfuscate", "--in", p(&input), "--out", p(&out), "--sigma", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["obfuscate", "--bogus"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "--in", ".", "--quality", "0"]).output().unwrap().status.code(), Some(2));
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("render-warnings"));
}

#[test]
fn operational_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["obfuscate", "--in", "/nonexistent.png", "--out", p(&dir.path().join("x.png"))]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["evaluate", "--manifest", "/nonexistent/manifest.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn detect_prints_boxes() {
    let o = bin().args(["detect", "--in", p(&fixture("mini/images/living-01.png"))]).output().unwrap();
    ok(&o);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["source"]["kind"], "heuristic");
    assert!(!v["boxes"].as_array().unwrap().is_empty());
}

#[test]
fn assess_then_render_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let o = bin()
        .args(["assess", "--in", p(&fixture("mini/images/living-01.png")), "--backend", "mock"])
        .args(["--scenarios", p(&fixture("mini/scenarios.json")), "--out", p(&a)])
        .output()
        .unwrap();
    ok(&o);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["frame_id"], "living-01");
    assert_eq!(v["risk"], true);

    let seq = dir.path().join("seq");
    let o = bin()
        .args(["render-warnings", "--assessment", p(&a), "--frame", p(&fixture("mini/images/living-01.png"))])
        .args(["--mode", "region-overlay", "--fps", "5", "--out", p(&seq)])
        .output()
        .unwrap();
    ok(&o);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(seq.join("frames.json")).unwrap()).unwrap();
    assert_eq!(m["frames"].as_array().unwrap().len(), 30);
    assert!(seq.join("frame_0029.png").exists());
    assert_eq!(image_bytes(&seq.join("frame_0005.png")), image_bytes(&fixture("mini/images/living-01.png")));
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["evaluate", "--manifest", p(&fixture("mini/manifest.json")), "--mode", "oracle-guided", "--backend", "mock"])
        .args(["--out", p(dir.path())])
        .output()
        .unwrap();
    ok(&o);
    for ext in ["csv", "md", "json"] {
        assert!(dir.path().join(format!("privar-oracle-guided.{ext}")).exists(), "{ext}");
    }
    let o = bin()
        .args(["evaluate", "--manifest", p(&fixture("mini/manifest.json")), "--mode", "privar", "--classifier", "all"])
        .args(["--backend", "mock", "--out", p(dir.path())])
        .output()
        .unwrap();
    ok(&o);
    let summary = std::fs::read_to_string(dir.path().join("summary.md")).unwrap();
    assert!(summary.contains("rule-based") && summary.contains("object-recognition") && summary.contains("scene-captioning"));
}

#[test]
fn make_fixture_matches_the_bundled_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bin().args(["make-fixture", "--out", p(dir.path())]).output().unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("manifest.json")).unwrap(),
        std::fs::read(fixture("mini/manifest.json")).unwrap()
    );
}

/// Counts connections to a local port that stands in for every proxy and the remote model URL.
struct Tripwire {
    url: String,
    hits: Arc<AtomicUsize>,
}

fn tripwire() -> Tripwire {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for mut s in listener.incoming().flatten() {
            counter.fetch_add(1, Ordering::SeqCst);
            s.set_read_timeout(Some(Duration::from_millis(200))).ok();
            let _ = s.read(&mut [0u8; 512]);
        }
    });
    Tripwire { url, hits }
}

fn guarded(cmd: &mut Command, wire: &Tripwire) {
    for k in ["HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy", "all_proxy"] {
        cmd.env(k, &wire.url);
    }
    // loopback stays direct so `run` can reach its own edge and cloud
    cmd.env("NO_PROXY", "127.0.0.1,localhost").env("no_proxy", "127.0.0.1,localhost");
    cmd.env("PRIVAR_VLM_URL", "http://198.51.100.7/v1/complete");
}

#[test]
fn mock_backend_touches_no_network() {
    let wire = tripwire();
    let dir = tempfile::tempdir().unwrap();

    let mut eval = bin();
    eval.args(["evaluate", "--manifest", p(&fixture("mini/manifest.json")), "--backend", "mock", "--cer", "--plr"]);
    eval.args(["--out", p(&dir.path().join("eval"))]);
    guarded(&mut eval, &wire);
    ok(&eval.output().unwrap());

    let mut run = bin();
    run.args(["run", "--in", p(&fixture("mini/images")), "--backend", "mock", "--scenarios", p(&fixture("mini/scenarios.json"))]);
    run.args(["--out", p(&dir.path().join("run"))]);
    guarded(&mut run, &wire);
    ok(&run.output().unwrap());

    assert_eq!(wire.hits.load(Ordering::SeqCst), 0);

    // the guard does catch traffic: a remote backend goes through the tripwire
    let mut remote = bin();
    remote.args(["assess", "--in", p(&fixture("mini/images/office-01.png")), "--backend", "remote"]);
    guarded(&mut remote, &wire);
    let out = remote.output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(wire.hits.load(Ordering::SeqCst) >= 1, "remote call bypassed the guard");
}
