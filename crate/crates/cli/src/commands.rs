//! Single-shot subcommands and the service launchers.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use privar_core::assessment::{assess, MockBackend, RemoteBackend, RemoteConfig, ReplayBackend, RiskAssessment, ScenarioTable, VlmBackend};
use privar_core::baselines::{
    CaptionClassifier, Classifier, ObjectRecognitionClassifier, OcrSource, RecordedDetections, RecordedOcr, RuleBasedClassifier,
    RuleSet, StagedClassifier,
};
use privar_core::dataset::Manifest;
use privar_core::detection::{DetectorConfig, ExternalDetections, TextDetector};
use privar_core::eval::{detection_table, protection_table, run_evaluation, EvalConfig, OcrProbe, ProtectionMode, Report};
use privar_core::imaging::{build_mask, compress, decompress, encode_mask_png, frame_seed, obfuscate, BoundingBox, Image, DEFAULT_QUALITY};
use privar_core::synth::{generate, mini_specs, password_note_specs, FixtureConfig};
use privar_core::warning::{write_sequence, FlashSchedule, WarningMode};
use privar_services::{cloud_router, edge_router, serve, CloudState, EdgeState, HttpCloudLink, CLOUD_TIMEOUT};

use crate::{non_negative, BackendFlags, BackendKind, DetectorKind, ObfuscationFlags};

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decompress(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// PNG unless the extension asks for JPEG.
fn save_image(path: &Path, image: &Image) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "jpg" || ext == "jpeg" {
        std::fs::write(path, compress(image, 95)?).with_context(|| format!("writing {}", path.display()))
    } else {
        image.save_png(path).with_context(|| format!("writing {}", path.display()))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "frame".into())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let body = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

#[derive(Args, Debug, Clone)]
pub struct DetectorFlags {
    #[arg(long, env = "PRIVAR_DETECTOR", value_enum, default_value_t = DetectorKind::Heuristic)]
    pub detector: DetectorKind,
    /// Manifest supplying annotated boxes (annotation detector).
    #[arg(long = "annotations", env = "PRIVAR_MANIFEST")]
    pub annotations: Option<PathBuf>,
    /// Recorded detector CSV `frame_id,x,y,w,h,confidence` (external detector).
    #[arg(long, env = "PRIVAR_DETECTIONS")]
    pub detections: Option<PathBuf>,
}

impl DetectorFlags {
    pub fn build(&self, manifest: Option<&Manifest>) -> Result<TextDetector> {
        Ok(match self.detector {
            DetectorKind::Heuristic => TextDetector::heuristic(DetectorConfig::default())?,
            DetectorKind::Annotation => match (&self.annotations, manifest) {
                (Some(path), _) => TextDetector::annotations(&Manifest::load(path)?),
                (None, Some(m)) => TextDetector::annotations(m),
                (None, None) => bail!("the annotation detector needs --annotations"),
            },
            DetectorKind::External => {
                let path = match (&self.detections, manifest) {
                    (Some(p), _) => p.clone(),
                    (None, Some(m)) => m.sidecar(&m.sidecars.text_boxes).context("manifest has no text_boxes sidecar")?,
                    (None, None) => bail!("the external detector needs --detections"),
                };
                TextDetector::External(ExternalDetections::load(&path)?)
            }
        })
    }
}

pub fn build_backend(flags: &BackendFlags, manifest: Option<&Manifest>) -> Result<Arc<dyn VlmBackend>> {
    Ok(match flags.backend {
        BackendKind::Mock => {
            let path = match (&flags.scenarios, manifest) {
                (Some(p), _) => p.clone(),
                (None, Some(m)) => m.sidecar(&m.sidecars.scenarios).context("manifest has no scenarios sidecar; pass --scenarios")?,
                (None, None) => bail!("the mock backend needs --scenarios"),
            };
            Arc::new(MockBackend::new(ScenarioTable::load(&path)?))
        }
        BackendKind::Remote => {
            let mut config = RemoteConfig::from_env()?;
            config.transcript = flags.transcript.clone();
            Arc::new(RemoteBackend::new(config))
        }
        BackendKind::Replay => {
            let path = flags.transcript.as_ref().context("the replay backend needs --transcript")?;
            Arc::new(ReplayBackend::load(path)?)
        }
    })
}

#[derive(Args, Debug)]
pub struct ObfuscateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON list of boxes `[{x,y,w,h}]`; replaces detection.
    #[arg(long, conflicts_with = "detector")]
    pub boxes: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorFlags,
    #[command(flatten)]
    pub obfuscation: ObfuscationFlags,
    /// Seeds the warp field; defaults to the input file stem.
    #[arg(long)]
    pub frame_id: Option<String>,
    /// Explicit warp seed, overriding the frame-id hash.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the binary mask as a 1-bit PNG.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
}

pub fn obfuscate_cmd(a: ObfuscateArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let frame_id = a.frame_id.clone().unwrap_or_else(|| stem(&a.input));
    let boxes: Vec<BoundingBox> = match &a.boxes {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => a.detector.build(None)?.detect(&frame_id, &image)?.boxes,
    };
    let params = a.obfuscation.params().with_seed(a.seed.unwrap_or_else(|| frame_seed(&frame_id)));
    let out = obfuscate(&image, &boxes, &params)?;
    save_image(&a.out, &out)?;
    if let Some(mask_path) = &a.mask_out {
        let mask = build_mask(&boxes, image.width(), image.height(), params.pad);
        std::fs::write(mask_path, encode_mask_png(&mask)?).with_context(|| format!("writing {}", mask_path.display()))?;
    }
    println!("{} boxes obfuscated -> {}", boxes.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub detector: DetectorFlags,
    #[arg(long)]
    pub frame_id: Option<String>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn detect(a: DetectArgs) -> Result<()> {
    let image = load_image(&a.input)?;
    let frame_id = a.frame_id.clone().unwrap_or_else(|| stem(&a.input));
    let detections = a.detector.build(None)?.detect(&frame_id, &image)?;
    match &a.out {
        Some(p) => write_json(p, &detections),
        None => {
            println!("{}", serde_json::to_string_pretty(&detections)?);
            Ok(())
        }
    }
}

#[derive(Args, Debug)]
pub struct AssessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub frame_id: Option<String>,
    /// Capture-side JPEG quality.
    #[arg(long, env = "PRIVAR_QUALITY", default_value_t = DEFAULT_QUALITY, value_parser = clap::value_parser!(u8).range(1..=100))]
    pub quality: u8,
    #[command(flatten)]
    pub detector: DetectorFlags,
    #[command(flatten)]
    pub obfuscation: ObfuscationFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn assess_cmd(a: AssessArgs) -> Result<()> {
    let raw = load_image(&a.input)?;
    let frame_id = a.frame_id.clone().unwrap_or_else(|| stem(&a.input));
    let captured = decompress(&compress(&raw, a.quality)?)?;
    let boxes = a.detector.build(None)?.detect(&frame_id, &captured)?.boxes;
    let params = a.obfuscation.params().for_frame(&frame_id);
    let forwarded = obfuscate(&captured, &boxes, &params)?;
    let backend = build_backend(&a.backend, None)?;
    let assessment: RiskAssessment = assess(&frame_id, &forwarded, &boxes, backend.as_ref())?;
    match &a.out {
        Some(p) => write_json(p, &assessment),
        None => {
            println!("{}", serde_json::to_string_pretty(&assessment)?);
            Ok(())
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn as_url(addr: &str) -> String {
    if addr.contains("://") {
        addr.to_string()
    } else {
        format!("http://{addr}")
    }
}

#[derive(Args, Debug)]
pub struct ServeEdgeArgs {
    #[arg(long, env = "PRIVAR_EDGE_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Cloud service address or URL.
    #[arg(long, env = "PRIVAR_CLOUD_ADDR", default_value = "127.0.0.1:8081")]
    pub cloud: String,
    #[command(flatten)]
    pub detector: DetectorFlags,
    #[command(flatten)]
    pub obfuscation: ObfuscationFlags,
    #[arg(long, env = "PRIVAR_MAX_CONCURRENCY", default_value_t = 8)]
    pub max_concurrency: usize,
}

pub fn serve_edge(a: ServeEdgeArgs) -> Result<()> {
    let detector = a.detector.build(None)?;
    let link = HttpCloudLink::new(&as_url(&a.cloud), CLOUD_TIMEOUT)?;
    let state = EdgeState::new(detector, a.obfuscation.params(), Arc::new(link), a.max_concurrency);
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr).await.with_context(|| format!("binding {}", a.addr))?;
        eprintln!("edge listening on {}, forwarding to {}", listener.local_addr()?, as_url(&a.cloud));
        serve(listener, edge_router(state)).await?;
        Ok(())
    })
}

#[derive(Args, Debug)]
pub struct ServeCloudArgs {
    #[arg(long, env = "PRIVAR_CLOUD_ADDR", default_value = "127.0.0.1:8081")]
    pub addr: String,
    #[command(flatten)]
    pub backend: BackendFlags,
    #[arg(long, env = "PRIVAR_MAX_CONCURRENCY", default_value_t = 8)]
    pub max_concurrency: usize,
}

pub fn serve_cloud(a: ServeCloudArgs) -> Result<()> {
    let backend = build_backend(&a.backend, None)?;
    let state = CloudState::new(backend, a.max_concurrency);
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr).await.with_context(|| format!("binding {}", a.addr))?;
        eprintln!("cloud listening on {}", listener.local_addr()?);
        serve(listener, cloud_router(state)).await?;
        Ok(())
    })
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeChoice {
    Privar,
    NoObfuscation,
    OracleGuided,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierChoice {
    Privar,
    RuleBased,
    ObjectRecognition,
    SceneCaptioning,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcrChoice {
    Transcript,
    External,
    Glyph,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeChoice::Privar)]
    pub mode: ModeChoice,
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Privar)]
    pub classifier: ClassifierChoice,
    #[command(flatten)]
    pub backend: BackendFlags,
    /// Box source for the privar and no-obfuscation modes.
    #[arg(long, value_enum, default_value_t = DetectorKind::Heuristic)]
    pub detector: DetectorKind,
    /// Text source for the rule-based baseline.
    #[arg(long, value_enum, default_value_t = OcrChoice::Transcript)]
    pub ocr: OcrChoice,
    /// Rule set JSON for the rule-based baseline.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Report character error rate between captured and forwarded frames.
    #[arg(long)]
    pub cer: bool,
    /// Report privacy leakage rate using the backend's item extraction.
    #[arg(long)]
    pub plr: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, env = "PRIVAR_QUALITY", default_value_t = DEFAULT_QUALITY, value_parser = clap::value_parser!(u8).range(1..=100))]
    pub quality: u8,
    #[command(flatten)]
    pub obfuscation: ObfuscationFlags,
    #[arg(long, default_value = "reports")]
    pub out: PathBuf,
}

fn classifier_for(choice: ClassifierChoice, a: &EvaluateArgs, manifest: &Manifest) -> Result<Box<dyn Classifier>> {
    Ok(match choice {
        ClassifierChoice::Privar => Box::new(StagedClassifier { backend: build_backend(&a.backend, Some(manifest))? }),
        ClassifierChoice::SceneCaptioning => {
            let b = build_backend(&a.backend, Some(manifest))?;
            Box::new(CaptionClassifier { vlm: b.clone(), llm: b })
        }
        ClassifierChoice::RuleBased => {
            let rules = match &a.rules {
                Some(p) => RuleSet::load(p)?,
                None => RuleSet::standard(),
            };
            let source = match a.ocr {
                OcrChoice::Transcript => OcrSource::Transcript,
                OcrChoice::Glyph => OcrSource::glyph(),
                OcrChoice::External => {
                    let p = manifest.sidecar(&manifest.sidecars.ocr).context("manifest has no ocr sidecar")?;
                    OcrSource::ExternalFile(RecordedOcr::load(&p)?)
                }
            };
            Box::new(RuleBasedClassifier { rules, source })
        }
        ClassifierChoice::ObjectRecognition => {
            let p = manifest.sidecar(&manifest.sidecars.objects).context("manifest has no objects sidecar")?;
            Box::new(ObjectRecognitionClassifier::new(RecordedDetections::load(&p)?))
        }
        ClassifierChoice::All => unreachable!("expanded by the caller"),
    })
}

fn choice_name(c: ClassifierChoice) -> &'static str {
    match c {
        ClassifierChoice::Privar => "privar",
        ClassifierChoice::RuleBased => "rule-based",
        ClassifierChoice::ObjectRecognition => "object-recognition",
        ClassifierChoice::SceneCaptioning => "scene-captioning",
        ClassifierChoice::All => "all",
    }
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    let classifiers = match a.classifier {
        ClassifierChoice::All => vec![
            ClassifierChoice::RuleBased,
            ClassifierChoice::ObjectRecognition,
            ClassifierChoice::SceneCaptioning,
            ClassifierChoice::Privar,
        ],
        c => vec![c],
    };
    let modes = match a.mode {
        ModeChoice::All => ProtectionMode::ALL.to_vec(),
        ModeChoice::Privar => vec![ProtectionMode::Privar],
        ModeChoice::NoObfuscation => vec![ProtectionMode::NoObfuscation],
        ModeChoice::OracleGuided => vec![ProtectionMode::OracleGuided],
    };
    let detector = DetectorFlags { detector: a.detector, annotations: None, detections: None }.build(Some(&manifest))?;
    let leakage = if a.plr { Some(build_backend(&a.backend, Some(&manifest))?) } else { None };
    let config = EvalConfig {
        params: a.obfuscation.params(),
        quality: a.quality,
        workers: a.workers,
        detector,
        ocr: a.cer.then(OcrProbe::default),
        leakage,
    };

    let mut reports: Vec<Report> = Vec::new();
    for &choice in &classifiers {
        let classifier = classifier_for(choice, &a, &manifest)?;
        for &mode in &modes {
            let report = run_evaluation(&manifest, classifier.as_ref(), mode, &config).map_err(anyhow::Error::msg)?;
            let stem = format!("{}-{}", choice_name(choice), mode.as_str());
            report.write(&a.out, &stem).with_context(|| format!("writing reports to {}", a.out.display()))?;
            println!(
                "{stem}: {} evaluated, {} failed{}",
                report.evaluated,
                report.failed,
                report.metrics.map(|m| format!(", F1 {:.2}", m.f1)).unwrap_or_default()
            );
            reports.push(report);
        }
    }
    if reports.len() > 1 {
        let summary = format!("{}\n{}", detection_table(&reports), protection_table(&reports));
        std::fs::write(a.out.join("summary.md"), summary)?;
    }
    if reports.iter().all(|r| r.evaluated == 0) {
        bail!("no item could be evaluated");
    }
    Ok(())
}

fn parse_mode(s: &str) -> Result<WarningMode, String> {
    s.parse()
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// RiskAssessment JSON (an AssessResponse body also works).
    #[arg(long)]
    pub assessment: PathBuf,
    #[arg(long)]
    pub frame: PathBuf,
    #[arg(long, value_parser = parse_mode, default_value = "center-screen")]
    pub mode: WarningMode,
    #[arg(long, default_value_t = 10.0, value_parser = non_negative)]
    pub fps: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    pub cycle: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    pub on: f64,
    #[arg(long, default_value_t = 6.0, value_parser = non_negative)]
    pub total: f64,
}

pub fn render_warnings(a: RenderArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.assessment).with_context(|| format!("reading {}", a.assessment.display()))?;
    let assessment: RiskAssessment = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.assessment.display()))?;
    let frame = load_image(&a.frame)?;
    let schedule = FlashSchedule { cycle_s: a.cycle, on_s: a.on, total_s: a.total };
    let seq = write_sequence(&a.out, &frame, &assessment, a.mode, a.fps, &schedule)?;
    println!("{} frames -> {}", seq.frames.len(), a.out.display());
    Ok(())
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureSet {
    Mini,
    PasswordNotes,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FixtureSet::Mini)]
    pub set: FixtureSet,
}

pub fn make_fixture(a: FixtureArgs) -> Result<()> {
    let specs = match a.set {
        FixtureSet::Mini => mini_specs(),
        FixtureSet::PasswordNotes => password_note_specs(),
    };
    let (manifest, _) = generate(&a.out, &specs, &FixtureConfig::default())?;
    println!("{} items -> {}", manifest.items.len(), a.out.join("manifest.json").display());
    Ok(())
}
