//! Service configuration from `PRIVAR_*` environment variables.

use std::path::PathBuf;
use std::str::FromStr;

use std::sync::Arc;

use privar_core::assessment::{MockBackend, RemoteBackend, RemoteConfig, ScenarioTable, VlmBackend};
use privar_core::dataset::Manifest;
use privar_core::detection::{DetectorConfig, ExternalDetections, TextDetector};
use privar_core::imaging::ObfuscationParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorChoice {
    Heuristic,
    Annotation,
    External,
}

impl FromStr for DetectorChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "annotation" => Ok(Self::Annotation),
            "external" => Ok(Self::External),
            _ => Err(format!("unknown detector {s:?} (heuristic, annotation, external)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    Mock,
    Remote,
}

impl FromStr for BackendChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mock" => Ok(Self::Mock),
            "remote" => Ok(Self::Remote),
            _ => Err(format!("unknown backend {s:?} (mock, remote)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub edge_addr: String,
    pub cloud_addr: String,
    pub params: ObfuscationParams,
    pub quality: u8,
    pub detector: DetectorChoice,
    pub backend: BackendChoice,
    /// Manifest for annotation boxes (`PRIVAR_MANIFEST`).
    pub manifest: Option<PathBuf>,
    /// Recorded detector CSV (`PRIVAR_DETECTIONS`).
    pub detections: Option<PathBuf>,
    /// Mock scenario table (`PRIVAR_SCENARIOS`).
    pub scenarios: Option<PathBuf>,
    pub max_concurrency: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            edge_addr: "127.0.0.1:8080".into(),
            cloud_addr: "127.0.0.1:8081".into(),
            params: ObfuscationParams::default(),
            quality: 75,
            detector: DetectorChoice::Heuristic,
            backend: BackendChoice::Mock,
            manifest: None,
            detections: None,
            scenarios: None,
            max_concurrency: 8,
        }
    }
}

fn parsed<T: FromStr>(key: &str, raw: Option<String>, default: T) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    match raw {
        None => Ok(default),
        Some(v) => v.trim().parse().map_err(|e| format!("{key}={v:?}: {e}")),
    }
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from an arbitrary key lookup; unset keys keep their defaults.
    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let d = Self::default();
        let params = ObfuscationParams {
            sigma: parsed("PRIVAR_SIGMA", get("PRIVAR_SIGMA"), d.params.sigma)?,
            beta: parsed("PRIVAR_BETA", get("PRIVAR_BETA"), d.params.beta)?,
            pad: parsed("PRIVAR_PAD", get("PRIVAR_PAD"), d.params.pad)?,
            seed: 0,
        };
        params.validate().map_err(|e| e.to_string())?;
        let quality: u8 = parsed("PRIVAR_QUALITY", get("PRIVAR_QUALITY"), d.quality)?;
        if !(1..=100).contains(&quality) {
            return Err(format!("PRIVAR_QUALITY={quality}: outside 1..=100"));
        }
        let cfg = Self {
            edge_addr: get("PRIVAR_EDGE_ADDR").unwrap_or(d.edge_addr),
            cloud_addr: get("PRIVAR_CLOUD_ADDR").unwrap_or(d.cloud_addr),
            params,
            quality,
            detector: parsed("PRIVAR_DETECTOR", get("PRIVAR_DETECTOR"), d.detector)?,
            backend: parsed("PRIVAR_BACKEND", get("PRIVAR_BACKEND"), d.backend)?,
            manifest: get("PRIVAR_MANIFEST").map(PathBuf::from),
            detections: get("PRIVAR_DETECTIONS").map(PathBuf::from),
            scenarios: get("PRIVAR_SCENARIOS").map(PathBuf::from),
            max_concurrency: parsed("PRIVAR_MAX_CONCURRENCY", get("PRIVAR_MAX_CONCURRENCY"), d.max_concurrency)?,
        };
        Ok(cfg)
    }
}

impl ServiceConfig {
    pub fn build_detector(&self) -> Result<TextDetector, String> {
        match self.detector {
            DetectorChoice::Heuristic => TextDetector::heuristic(DetectorConfig::default()).map_err(|e| e.to_string()),
            DetectorChoice::Annotation => {
                let path = self.manifest.as_ref().ok_or("annotation detector needs PRIVAR_MANIFEST")?;
                let manifest = Manifest::load(path).map_err(|e| e.to_string())?;
                Ok(TextDetector::annotations(&manifest))
            }
            DetectorChoice::External => {
                let path = self.detections.as_ref().ok_or("external detector needs PRIVAR_DETECTIONS")?;
                Ok(TextDetector::External(ExternalDetections::load(path).map_err(|e| e.to_string())?))
            }
        }
    }

    pub fn build_backend(&self) -> Result<Arc<dyn VlmBackend>, String> {
        match self.backend {
            BackendChoice::Mock => {
                let path = self.scenarios.as_ref().ok_or("mock backend needs PRIVAR_SCENARIOS")?;
                Ok(Arc::new(MockBackend::new(ScenarioTable::load(path).map_err(|e| e.to_string())?)))
            }
            BackendChoice::Remote => Ok(Arc::new(RemoteBackend::new(RemoteConfig::from_env().map_err(|e| e.to_string())?))),
        }
    }
}
