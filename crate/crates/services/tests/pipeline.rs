use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use privar_core::assessment::{
    BackendError, CotStagePrompt, MockBackend, MockScenario, Rationales, ScenarioTable, VlmBackend,
};
use privar_core::dataset::Manifest;
use privar_core::detection::{DetectorConfig, TextDetector};
use privar_core::imaging::{decompress, BoundingBox, Image, ObfuscationParams};
use privar_core::synth::{generate, mini_specs, FixtureConfig};
use privar_services::protocol::{decode_b64, encode_b64};
use privar_services::*;
use tokio::net::TcpListener;

struct Counting {
    inner: Arc<dyn VlmBackend>,
    calls: AtomicUsize,
}

impl VlmBackend for Counting {
    fn id(&self) -> String {
        self.inner.id()
    }
    fn complete(&self, prompt: &CotStagePrompt) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(prompt)
    }
}

/// Records every request crossing the edge-to-cloud hop.
struct Tap {
    inner: InProcessCloudLink,
    seen: Mutex<Vec<AssessRequest>>,
}

impl CloudLink for Tap {
    fn assess(&self, req: AssessRequest) -> LinkFuture<'_> {
        self.seen.lock().unwrap().push(req.clone());
        self.inner.assess(req)
    }
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifest: Manifest,
    table: ScenarioTable,
}

fn fixture(ids: &[&str]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let specs: Vec<_> = mini_specs().into_iter().filter(|s| ids.contains(&s.id)).collect();
    assert_eq!(specs.len(), ids.len());
    let (manifest, _) = generate(dir.path(), &specs, &FixtureConfig::default()).unwrap();
    let table = ScenarioTable::load(&dir.path().join("scenarios.json")).unwrap();
    Fixture { root: dir.path().to_path_buf(), _dir: dir, manifest, table }
}

fn heuristic() -> TextDetector {
    TextDetector::heuristic(DetectorConfig::default()).unwrap()
}

fn counting(table: ScenarioTable) -> Arc<Counting> {
    Arc::new(Counting { inner: Arc::new(MockBackend::new(table)), calls: AtomicUsize::new(0) })
}

fn edge_with(link: Arc<dyn CloudLink>) -> EdgeState {
    EdgeState::new(heuristic(), ObfuscationParams::default(), link, 8)
}

fn in_process(backend: Arc<dyn VlmBackend>) -> Arc<dyn CloudLink> {
    Arc::new(InProcessCloudLink(CloudState::new(backend, 8)))
}

async fn spawn(router: axum::Router) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, router));
    format!("http://{addr}")
}

/// Edge and cloud as real HTTP services; returns the edge URL.
async fn spawn_stack(backend: Arc<dyn VlmBackend>) -> String {
    let cloud_url = spawn(cloud_router(CloudState::new(backend, 8))).await;
    let link = HttpCloudLink::new(&cloud_url, CLOUD_TIMEOUT).unwrap();
    spawn(edge_router(edge_with(Arc::new(link)))).await
}

fn image_path(f: &Fixture, id: &str) -> PathBuf {
    f.root.join(&f.manifest.item(id).unwrap().image_path)
}

fn plain(w: u32, h: u32, level: u8) -> Image {
    Image::filled(w, h, &[level, level / 2, 255 - level]).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn end_to_end_over_http_matches_scenario() {
    let f = fixture(&["office-01", "cafe-01"]);
    let edge = spawn_stack(Arc::new(MockBackend::new(f.table.clone()))).await;
    for id in ["office-01", "cafe-01"] {
        let resp = device_submit(&image_path(&f, id), &edge, 75, Some(id), DEVICE_TIMEOUT).await.unwrap();
        assert_eq!(resp.assessment.frame_id, id);
        let expected = f.manifest.item(id).unwrap().label.is_positive();
        assert_eq!(resp.assessment.risk, expected, "{id}");
        assert_eq!(resp.assessment.backend_id, "mock");
        assert!(resp.processing_ms.edge.is_some());
    }
}

#[tokio::test]
async fn corrupt_base64_is_rejected_before_the_cloud() {
    let backend = counting(ScenarioTable::new(vec![]).unwrap());
    let edge = edge_with(in_process(backend.clone()));
    let mut env = build_envelope(&plain(32, 24, 90), 75, Some("bad-1")).unwrap();
    env.image_data = "%%%not base64%%%".into();
    let err = edge_handle(&edge, env).await.unwrap_err();
    assert_eq!(err.error.status().as_u16(), 400);
    assert_eq!(err.frame_id.as_deref(), Some("bad-1"));
    assert_eq!(backend.calls.load(Ordering::SeqCst), 0);

    // valid base64 that is not a JPEG stream
    let mut env = build_envelope(&plain(32, 24, 90), 75, Some("bad-2")).unwrap();
    env.image_data = encode_b64(b"definitely not an image");
    assert_eq!(edge_handle(&edge, env).await.unwrap_err().error.status().as_u16(), 400);
    assert_eq!(backend.calls.load(Ordering::SeqCst), 0);
}

fn scenario_for(image: &Image, risk: bool, tag: &str) -> MockScenario {
    MockScenario {
        fingerprint: image.fingerprint(),
        scene: "office".into(),
        topic: tag.into(),
        risk,
        rationales: Rationales { scene: "desk".into(), topic: "none".into(), risk: tag.into() },
        caption: None,
        items: None,
    }
}

#[tokio::test]
async fn textless_frame_is_forwarded_unchanged_with_no_boxes() {
    let raw = plain(64, 48, 120);
    let env = build_envelope(&raw, 75, Some("blank")).unwrap();
    let captured = decompress(&decode_b64(&env.image_data).unwrap()).unwrap();
    let table = ScenarioTable::new(vec![scenario_for(&captured, false, "blank")]).unwrap();
    let tap = Arc::new(Tap { inner: InProcessCloudLink(CloudState::new(Arc::new(MockBackend::new(table)), 2)), seen: Mutex::default() });
    let edge = edge_with(tap.clone());
    let resp = edge_handle(&edge, env).await.unwrap();
    assert!(!resp.assessment.risk);
    let seen = tap.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert!(seen[0].boxes.is_empty());
    assert!(seen[0].obfuscation_applied);
    let forwarded = decompress(&decode_b64(&seen[0].obfuscated_image).unwrap()).unwrap();
    assert_eq!(forwarded, captured);
}

#[tokio::test]
async fn raw_text_pixels_never_reach_the_cloud() {
    let f = fixture(&["office-01", "bedroom-03"]);
    let tap = Arc::new(Tap {
        inner: InProcessCloudLink(CloudState::new(Arc::new(MockBackend::new(f.table.clone())), 2)),
        seen: Mutex::default(),
    });
    let edge = edge_with(tap.clone());
    for id in ["office-01", "bedroom-03"] {
        let raw = decompress(&std::fs::read(image_path(&f, id)).unwrap()).unwrap();
        let env = build_envelope(&raw, 75, Some(id)).unwrap();
        let captured = decompress(&decode_b64(&env.image_data).unwrap()).unwrap();
        edge_handle(&edge, env).await.unwrap();
        let req = tap.seen.lock().unwrap().last().cloned().unwrap();
        assert!(!req.boxes.is_empty(), "{id}");
        let sent = decompress(&decode_b64(&req.obfuscated_image).unwrap()).unwrap();
        for b in &req.boxes {
            let differs = (b.y..b.bottom()).any(|y| (b.x..b.right()).any(|x| sent.pixel(x, y) != captured.pixel(x, y)));
            assert!(differs, "{id}: box {b:?} forwarded verbatim");
        }
        assert_eq!(req.params_echo, ParamsEcho { sigma: 5.0, beta: 40.0, pad: 4 });
    }
}

fn request_for(image: &Image, boxes: Vec<BoundingBox>, applied: bool) -> AssessRequest {
    AssessRequest {
        frame_id: "c-1".into(),
        obfuscated_image: encode_b64(&privar_core::imaging::encode_png(image).unwrap()),
        boxes,
        obfuscation_applied: applied,
        params_echo: ParamsEcho::from(&ObfuscationParams::default()),
    }
}

#[tokio::test]
async fn cloud_refuses_unobfuscated_frames() {
    let img = plain(40, 30, 10);
    let table = ScenarioTable::new(vec![scenario_for(&img, true, "x")]).unwrap();
    let backend = counting(table);
    let err = cloud_assess(backend.as_ref(), &request_for(&img, vec![], false)).unwrap_err();
    assert_eq!(err.error, ServiceError::Unobfuscated);
    assert_eq!(err.error.to_string(), "unobfuscated frame refused");
    assert_eq!(backend.calls.load(Ordering::SeqCst), 0);

    let url = spawn(cloud_router(CloudState::new(backend.clone(), 2))).await;
    let resp = reqwest::Client::new()
        .post(format!("{url}/v1/assess"))
        .json(&request_for(&img, vec![], false))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 403);
    let body: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(body["error"], "unobfuscated frame refused");
    assert_eq!(body["frame_id"], "c-1");

    let ok = cloud_assess(backend.as_ref(), &request_for(&img, vec![BoundingBox::new(0, 0, 5, 5)], true)).unwrap();
    assert!(ok.assessment.risk);
}

#[test]
fn cloud_names_the_overflowing_box() {
    let img = plain(40, 30, 10);
    let backend = counting(ScenarioTable::new(vec![]).unwrap());
    let boxes = vec![BoundingBox::new(0, 0, 10, 10), BoundingBox::new(35, 5, 10, 4)];
    let err = cloud_assess(backend.as_ref(), &request_for(&img, boxes, true)).unwrap_err();
    assert_eq!(err.error.status().as_u16(), 422);
    assert!(err.error.to_string().contains("box 1"), "{err}");
    assert_eq!(backend.calls.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn backend_failures_name_the_stage() {
    let img = plain(40, 30, 10);
    let backend = counting(ScenarioTable::new(vec![]).unwrap());
    let err = cloud_assess(backend.as_ref(), &request_for(&img, vec![], true)).unwrap_err();
    assert_eq!(err.error.status().as_u16(), 502);
    match &err.error {
        ServiceError::Upstream { stage, .. } => assert_eq!(stage, "scene"),
        other => panic!("{other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn interleaved_frames_keep_their_ids() {
    const N: usize = 100;
    let mut envelopes = Vec::new();
    let mut scenarios = Vec::new();
    for i in 0..N {
        let img = plain(24 + (i % 5) as u32, 16, (i * 2) as u8);
        let env = build_envelope(&img, 75, Some(&format!("frame-{i:03}"))).unwrap();
        let captured = decompress(&decode_b64(&env.image_data).unwrap()).unwrap();
        scenarios.push(scenario_for(&captured, i % 3 == 0, &format!("frame-{i:03}")));
        envelopes.push(env);
    }
    let edge = spawn_stack(Arc::new(MockBackend::new(ScenarioTable::new(scenarios).unwrap()))).await;
    let client = reqwest::Client::builder().timeout(DEVICE_TIMEOUT).build().unwrap();
    let tasks: Vec<_> = envelopes
        .into_iter()
        .map(|env| {
            let (client, edge) = (client.clone(), edge.clone());
            tokio::spawn(async move { (env.frame_id.clone(), post_envelope(&client, &edge, &env).await) })
        })
        .collect();
    for (i, t) in tasks.into_iter().enumerate() {
        let (id, resp) = t.await.unwrap();
        let resp = resp.unwrap();
        assert_eq!(resp.assessment.frame_id, id);
        // the scenario's rationale carries the id it was built for
        assert_eq!(resp.assessment.risk_rationale, id);
        assert_eq!(resp.assessment.risk, i % 3 == 0);
    }
}

#[tokio::test]
async fn unreachable_edge_fails_without_retry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.png");
    plain(16, 16, 3).save_png(&path).unwrap();

    // closed port
    let closed = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", closed.local_addr().unwrap());
    drop(closed);
    let err = device_submit(&path, &url, 75, None, Duration::from_secs(2)).await.unwrap_err();
    assert_eq!(err.error.status().as_u16(), 502, "{err}");

    // accepts but never answers
    let silent = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", silent.local_addr().unwrap());
    let accepted = Arc::new(AtomicUsize::new(0));
    let counter = accepted.clone();
    tokio::spawn(async move {
        let mut held = Vec::new();
        while let Ok((sock, _)) = silent.accept().await {
            counter.fetch_add(1, Ordering::SeqCst);
            held.push(sock);
        }
    });
    let start = Instant::now();
    let err = device_submit(&path, &url, 75, Some("late"), Duration::from_millis(400)).await.unwrap_err();
    let took = start.elapsed();
    assert!(matches!(err.error, ServiceError::Timeout(_)), "{err}");
    assert_eq!(err.frame_id.as_deref(), Some("late"));
    assert!(took < Duration::from_secs(3), "{took:?}");
    assert_eq!(accepted.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn cloud_timeout_surfaces_as_gateway_timeout() {
    let silent = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", silent.local_addr().unwrap());
    tokio::spawn(async move {
        let mut held = Vec::new();
        while let Ok((sock, _)) = silent.accept().await {
            held.push(sock);
        }
    });
    let link = HttpCloudLink::new(&url, Duration::from_millis(300)).unwrap();
    let edge = edge_with(Arc::new(link));
    let env = build_envelope(&plain(32, 24, 50), 75, Some("slow-1")).unwrap();
    let err = edge_handle(&edge, env).await.unwrap_err();
    assert_eq!(err.error.status().as_u16(), 504);
    assert_eq!(err.frame_id.as_deref(), Some("slow-1"));
}

#[tokio::test(flavor = "multi_thread")]
async fn restarts_do_not_change_answers() {
    let f = fixture(&["bedroom-03"]);
    let path = image_path(&f, "bedroom-03");
    let mut answers = Vec::new();
    for _ in 0..2 {
        let edge = spawn_stack(Arc::new(MockBackend::new(f.table.clone()))).await;
        let resp = device_submit(&path, &edge, 75, Some("bedroom-03"), DEVICE_TIMEOUT).await.unwrap();
        answers.push(resp.assessment);
    }
    assert_eq!(answers[0], answers[1]);
}

#[tokio::test]
async fn health_endpoints() {
    let backend = counting(ScenarioTable::new(vec![]).unwrap());
    let cloud = spawn(cloud_router(CloudState::new(backend.clone(), 1))).await;
    let edge = spawn(edge_router(edge_with(in_process(backend)))).await;
    for (url, name) in [(cloud, "cloud"), (edge, "edge")] {
        let h: serde_json::Value = reqwest::get(format!("{url}/v1/health")).await.unwrap().json().await.unwrap();
        assert_eq!(h["status"], "ok");
        assert_eq!(h["service"], name);
    }
}
