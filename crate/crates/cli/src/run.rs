//! `run`: every image in a directory through device, edge and cloud over HTTP.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use privar_core::imaging::{BoundingBox, DEFAULT_QUALITY};
use privar_services::device::{build_envelope, device_client, load_image, post_envelope};
use privar_services::{cloud_router, edge_router, serve, CloudState, EdgeState, HttpCloudLink, CLOUD_TIMEOUT};

use crate::commands::{build_backend, DetectorFlags};
use crate::{BackendFlags, ObfuscationFlags};

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Directory of .png/.jpg frames (or one holding an `images/` directory).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "run-out")]
    pub out: PathBuf,
    /// Use running services at this edge URL instead of starting local ones.
    #[arg(long)]
    pub edge_url: Option<String>,
    #[arg(long, env = "PRIVAR_QUALITY", default_value_t = DEFAULT_QUALITY, value_parser = clap::value_parser!(u8).range(1..=100))]
    pub quality: u8,
    /// Frames in flight at once.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Device-side request timeout in seconds.
    #[arg(long, default_value_t = 35)]
    pub timeout: u64,
    #[command(flatten)]
    pub detector: DetectorFlags,
    #[command(flatten)]
    pub obfuscation: ObfuscationFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub frame_id: String,
    pub file: String,
    pub risk: Option<bool>,
    pub scene_label: String,
    pub topic_inference: String,
    pub risk_rationale: String,
    pub regions: Vec<BoundingBox>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub frames: usize,
    pub risky: usize,
    pub failed: usize,
    pub rows: Vec<RunRow>,
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let scan = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = std::fs::read_dir(d)
            .with_context(|| format!("listing {}", d.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        v.sort();
        Ok(v)
    };
    let mut frames = scan(dir)?;
    if frames.is_empty() && dir.join("images").is_dir() {
        frames = scan(&dir.join("images"))?;
    }
    if frames.is_empty() {
        bail!("no .png or .jpg frames in {}", dir.display());
    }
    Ok(frames)
}

fn to_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["frame_id", "file", "risk", "scene", "regions", "topic", "rationale", "error"])?;
    for r in &report.rows {
        let regions = r.regions.iter().map(|b| format!("{} {} {} {}", b.x, b.y, b.w, b.h)).collect::<Vec<_>>().join(";");
        w.write_record([
            r.frame_id.as_str(),
            &r.file,
            &r.risk.map(|b| b.to_string()).unwrap_or_default(),
            &r.scene_label,
            &regions,
            &r.topic_inference,
            &r.risk_rationale,
            r.error.as_deref().unwrap_or(""),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

async fn start_local(a: &RunArgs) -> Result<String> {
    let backend = build_backend(&a.backend, None)?;
    let cloud = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let cloud_url = format!("http://{}", cloud.local_addr()?);
    tokio::spawn(serve(cloud, cloud_router(CloudState::new(backend, a.workers.max(1)))));
    let link = HttpCloudLink::new(&cloud_url, CLOUD_TIMEOUT)?;
    let state = EdgeState::new(a.detector.build(None)?, a.obfuscation.params(), Arc::new(link), a.workers.max(1));
    let edge = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let edge_url = format!("http://{}", edge.local_addr()?);
    tokio::spawn(serve(edge, edge_router(state)));
    Ok(edge_url)
}

async fn submit_all(a: &RunArgs, frames: Vec<PathBuf>, edge_url: String) -> Result<Vec<RunRow>> {
    let client = device_client(Duration::from_secs(a.timeout))?;
    let limiter = Arc::new(Semaphore::new(a.workers.max(1)));
    let mut tasks = Vec::new();
    for path in frames {
        let (client, edge_url, limiter, quality) = (client.clone(), edge_url.clone(), limiter.clone(), a.quality);
        tasks.push(tokio::spawn(async move {
            let _permit = limiter.acquire_owned().await.expect("semaphore is never closed");
            let frame_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let mut row = RunRow {
                frame_id: frame_id.clone(),
                file,
                risk: None,
                scene_label: String::new(),
                topic_inference: String::new(),
                risk_rationale: String::new(),
                regions: vec![],
                error: None,
            };
            let outcome = async {
                let image = load_image(&path)?;
                let env = build_envelope(&image, quality, Some(&frame_id))?;
                post_envelope(&client, &edge_url, &env).await
            }
            .await;
            match outcome {
                Ok(resp) => {
                    let a = resp.assessment;
                    row.risk = Some(a.risk);
                    row.scene_label = a.scene_label;
                    row.topic_inference = a.topic_inference;
                    row.risk_rationale = a.risk_rationale;
                    row.regions = a.regions;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        }));
    }
    let mut rows = Vec::with_capacity(tasks.len());
    for t in tasks {
        rows.push(t.await?);
    }
    rows.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    Ok(rows)
}

pub fn run(a: RunArgs) -> Result<()> {
    let frames = list_frames(&a.input)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let rows = rt.block_on(async {
        let edge_url = match &a.edge_url {
            Some(u) => u.clone(),
            None => start_local(&a).await?,
        };
        submit_all(&a, frames, edge_url).await
    })?;
    let report = RunReport {
        frames: rows.len(),
        risky: rows.iter().filter(|r| r.risk == Some(true)).count(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    std::fs::write(a.out.join("run.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(a.out.join("run.csv"), to_csv(&report)?)?;
    println!("{} frames, {} risky, {} failed -> {}", report.frames, report.risky, report.failed, a.out.display());
    if report.failed > 0 {
        bail!("{} of {} frames failed", report.failed, report.frames);
    }
    Ok(())
}
