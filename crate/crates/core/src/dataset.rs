//! Dataset manifest: items binding an image to its label, scene, annotations and transcripts.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imaging::BoundingBox;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Sensitive,
    NonSensitive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Sensitive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scene {
    Office,
    LivingRoom,
    Bedroom,
    #[serde(rename = "café", alias = "cafe")]
    Cafe,
}

impl Scene {
    pub fn as_str(self) -> &'static str {
        match self {
            Scene::Office => "office",
            Scene::LivingRoom => "living room",
            Scene::Bedroom => "bedroom",
            Scene::Cafe => "café",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitiveType {
    IdCard,
    CreditCard,
    PasswordNote,
    Transcript,
    MedicalReport,
    OnScreenText,
}

/// Ground-truth text region, optionally with its transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedBox {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub id: String,
    pub image_path: PathBuf,
    pub label: Label,
    pub scene: Scene,
    #[serde(default)]
    pub sensitive_types: Vec<SensitiveType>,
    /// `None` when the item carries no annotation record at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_boxes: Option<Vec<AnnotatedBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    /// Content hash of the decoded source image.
    pub fingerprint: String,
}

/// Paths of optional recorded-output sidecars, relative to the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecars {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_boxes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocr: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<PathBuf>,
}

impl Sidecars {
    fn is_empty(&self) -> bool {
        *self == Sidecars::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub items: Vec<DatasetItem>,
    #[serde(default, skip_serializing_if = "Sidecars::is_empty")]
    pub sidecars: Sidecars,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub root: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("manifest parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    Version(u32),
    #[error("duplicate item id {0}")]
    DuplicateId(String),
    #[error("item {0}: non-sensitive items must not list sensitive types")]
    NegativeWithTypes(String),
}

impl Manifest {
    pub fn new(items: Vec<DatasetItem>) -> Self {
        Self { version: MANIFEST_VERSION, items, sidecars: Sidecars::default(), root: PathBuf::new() }
    }

    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io(path.display().to_string(), e))?;
        let mut manifest: Manifest = serde_json::from_str(&text)?;
        manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| ManifestError::Io(path.display().to_string(), e))
    }

    /// Structural checks that need no image decoding.
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.version != MANIFEST_VERSION {
            return Err(ManifestError::Version(self.version));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(ManifestError::DuplicateId(item.id.clone()));
            }
            if item.label == Label::NonSensitive && !item.sensitive_types.is_empty() {
                return Err(ManifestError::NegativeWithTypes(item.id.clone()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.root.join(rel)
        }
    }

    pub fn image_path(&self, item: &DatasetItem) -> PathBuf {
        self.resolve(&item.image_path)
    }

    pub fn sidecar(&self, rel: &Option<PathBuf>) -> Option<PathBuf> {
        rel.as_deref().map(|p| self.resolve(p))
    }

    pub fn item(&self, id: &str) -> Option<&DatasetItem> {
        self.items.iter().find(|i| i.id == id)
    }
}
