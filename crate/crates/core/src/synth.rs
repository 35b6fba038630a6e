//! Deterministic synthetic dataset: rendered scenes with text cards, their
//! annotations, recorded baseline outputs and a mock scenario table covering
//! every protection variant of every frame.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::assessment::{MockScenario, Rationales, ScenarioTable};
use crate::baselines::{standard_rules, RecordedDetection, RecordedDetections, RecordedOcr};
use crate::dataset::{AnnotatedBox, DatasetItem, Label, Manifest, Scene, SensitiveType, Sidecars};
use crate::detection::{detect_heuristic, DetectorConfig, ExternalDetections};
use crate::eval::normalize_item;
use crate::font::{draw_text, text_size, GLYPH_H};
use crate::imaging::{build_mask, compress, decompress, obfuscate, BoundingBox, Image, ObfuscationParams, DEFAULT_QUALITY};
use crate::ocr::GlyphReader;

pub const WIDTH: u32 = 320;
pub const HEIGHT: u32 = 240;
const LINE_GAP: u32 = 10;
const CARD_MARGIN: u32 = 12;

/// A rectangle of paper, screen or plastic with lines of text on it.
#[derive(Clone, Debug)]
pub struct Card {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub color: [u8; 3],
    pub ink: [u8; 3],
    pub scale: u32,
    /// `(text, sensitive)` from top to bottom.
    pub lines: Vec<(&'static str, bool)>,
}

impl Card {
    fn line_boxes(&self) -> Vec<(BoundingBox, &'static str, bool)> {
        let step = GLYPH_H * self.scale + LINE_GAP;
        self.lines
            .iter()
            .enumerate()
            .map(|(i, &(text, sensitive))| {
                let (w, h) = text_size(text, self.scale);
                (BoundingBox::new(self.x + CARD_MARGIN, self.y + CARD_MARGIN + i as u32 * step, w, h), text, sensitive)
            })
            .collect()
    }
}

/// Decorative, text-free object placed in the scene.
#[derive(Clone, Copy, Debug)]
pub enum Prop {
    Cup { x: u32, y: u32 },
    Plant { x: u32, y: u32 },
    Vase { x: u32, y: u32 },
    Chair { x: u32, y: u32 },
}

/// Canned model behavior for one item, shared by all of its protection variants.
#[derive(Clone, Debug)]
pub struct Script {
    pub scene: &'static str,
    pub topic: &'static str,
    pub risk: bool,
    pub rationales: [&'static str; 3],
    pub caption: &'static str,
}

#[derive(Clone, Debug)]
pub struct ItemSpec {
    pub id: &'static str,
    pub scene: Scene,
    pub label: Label,
    pub types: Vec<SensitiveType>,
    pub cards: Vec<Card>,
    pub props: Vec<Prop>,
    pub script: Script,
    /// Recorded object-detector output: `(class, confidence, box)`.
    pub objects: Vec<(&'static str, f64, BoundingBox)>,
}

fn scene_palette(scene: Scene) -> ([u8; 3], [u8; 3]) {
    match scene {
        Scene::Office => ([196, 198, 188], [118, 92, 64]),
        Scene::LivingRoom => ([184, 172, 150], [96, 110, 84]),
        Scene::Bedroom => ([152, 162, 188], [170, 140, 150]),
        Scene::Cafe => ([168, 132, 100], [70, 52, 40]),
    }
}

fn fill_rect(img: &mut Image, x: u32, y: u32, w: u32, h: u32, color: &[u8]) {
    for yy in y..(y + h).min(img.height()) {
        for xx in x..(x + w).min(img.width()) {
            img.set_pixel(xx, yy, color);
        }
    }
}

fn fill_disc(img: &mut Image, cx: i64, cy: i64, r: i64, color: &[u8]) {
    for y in (cy - r).max(0)..(cy + r + 1).min(i64::from(img.height())) {
        for x in (cx - r).max(0)..(cx + r + 1).min(i64::from(img.width())) {
            if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                img.set_pixel(x as u32, y as u32, color);
            }
        }
    }
}

fn draw_prop(img: &mut Image, prop: Prop) {
    match prop {
        Prop::Cup { x, y } => {
            fill_rect(img, x, y, 22, 26, &[236, 236, 230]);
            fill_rect(img, x + 22, y + 6, 6, 12, &[236, 236, 230]);
        }
        Prop::Plant { x, y } => {
            fill_rect(img, x + 8, y + 28, 18, 20, &[150, 86, 50]);
            fill_disc(img, i64::from(x) + 17, i64::from(y) + 16, 15, &[58, 120, 60]);
        }
        Prop::Vase { x, y } => {
            fill_disc(img, i64::from(x) + 12, i64::from(y) + 28, 12, &[70, 90, 150]);
            fill_rect(img, x + 7, y, 10, 18, &[70, 90, 150]);
        }
        Prop::Chair { x, y } => {
            fill_rect(img, x, y, 36, 6, &[90, 60, 40]);
            fill_rect(img, x, y, 6, 48, &[90, 60, 40]);
            fill_rect(img, x + 30, y + 20, 6, 28, &[90, 60, 40]);
        }
    }
}

/// Renders the scene: wall, floor or furniture band, props, then cards with text.
pub fn render(spec: &ItemSpec) -> Image {
    let (wall, band) = scene_palette(spec.scene);
    let mut img = Image::filled(WIDTH, HEIGHT, &wall).expect("fixed dimensions");
    fill_rect(&mut img, 0, HEIGHT * 3 / 4, WIDTH, HEIGHT / 4, &band);
    for prop in &spec.props {
        draw_prop(&mut img, *prop);
    }
    for card in &spec.cards {
        fill_rect(&mut img, card.x, card.y, card.w, card.h, &card.color);
        for (b, text, _) in card.line_boxes() {
            draw_text(&mut img, i64::from(b.x), i64::from(b.y), text, card.scale, &card.ink);
        }
    }
    img
}

fn text_lines(spec: &ItemSpec) -> Vec<(BoundingBox, &'static str, bool)> {
    let mut lines: Vec<_> = spec.cards.iter().flat_map(Card::line_boxes).collect();
    lines.sort_by_key(|(b, _, _)| (b.y, b.x));
    lines
}

/// Pipeline settings the scenario fingerprints are computed under.
#[derive(Clone, Debug)]
pub struct FixtureConfig {
    pub params: ObfuscationParams,
    pub quality: u8,
    pub detector: DetectorConfig,
    pub reader: GlyphReader,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            params: ObfuscationParams::default(),
            quality: DEFAULT_QUALITY,
            detector: DetectorConfig::default(),
            reader: GlyphReader::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("{0}")]
    Pipeline(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

fn pipe<E: std::fmt::Display>(e: E) -> SynthError {
    SynthError::Pipeline(e.to_string())
}

/// The three frames a model may be shown for one item.
pub struct Variants {
    pub captured: Image,
    pub privar: Image,
    pub oracle: Image,
    pub detected: Vec<BoundingBox>,
}

pub fn variants(id: &str, source: &Image, gt: &[BoundingBox], config: &FixtureConfig) -> Result<Variants, SynthError> {
    let captured = decompress(&compress(source, config.quality).map_err(pipe)?).map_err(pipe)?;
    let detected = detect_heuristic(&captured, &config.detector);
    let params = config.params.for_frame(id);
    let privar = obfuscate(&captured, &detected, &params).map_err(pipe)?;
    let oracle = obfuscate(&captured, gt, &params).map_err(pipe)?;
    Ok(Variants { captured, privar, oracle, detected })
}

/// Sensitive lines the glyph reader still recovers verbatim from `image`.
fn legible_items(image: &Image, lines: &[(BoundingBox, &'static str, bool)], reader: &GlyphReader) -> Vec<String> {
    lines
        .iter()
        .filter(|(_, _, sensitive)| *sensitive)
        .filter_map(|(b, text, _)| {
            let loose = BoundingBox::new(b.x.saturating_sub(3), b.y.saturating_sub(3), b.w + 6, b.h + 6);
            (normalize_item(&reader.read_region(image, loose)) == normalize_item(text)).then(|| text.to_string())
        })
        .collect()
}

/// Summary of a generated fixture, for diagnostics.
#[derive(Clone, Debug)]
pub struct GeneratedItem {
    pub id: String,
    pub detected: Vec<BoundingBox>,
    pub gt: Vec<BoundingBox>,
    pub legible_captured: Vec<String>,
    pub legible_privar: Vec<String>,
    pub legible_oracle: Vec<String>,
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), SynthError> {
    std::fs::write(path, body).map_err(|e| SynthError::Io(path.display().to_string(), e))
}

/// Writes images, manifest and sidecars for `specs` into `dir`.
pub fn generate(dir: &Path, specs: &[ItemSpec], config: &FixtureConfig) -> Result<(Manifest, Vec<GeneratedItem>), SynthError> {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| SynthError::Io(images.display().to_string(), e))?;
    let mut items = Vec::new();
    let mut report = Vec::new();
    let mut scenarios: BTreeMap<String, MockScenario> = BTreeMap::new();
    let mut objects = Vec::new();
    let mut ocr = RecordedOcr::default();
    let mut text_boxes = Vec::new();

    for spec in specs {
        let source = render(spec);
        let rel = PathBuf::from("images").join(format!("{}.png", spec.id));
        source.save_png(&dir.join(&rel)).map_err(pipe)?;
        let lines = text_lines(spec);
        let gt: Vec<BoundingBox> = lines.iter().filter(|l| l.2).map(|l| l.0).collect();
        let v = variants(spec.id, &source, &gt, config)?;

        let legible = |img: &Image| legible_items(img, &lines, &config.reader);
        let generated = GeneratedItem {
            id: spec.id.into(),
            detected: v.detected.clone(),
            gt: gt.clone(),
            legible_captured: legible(&v.captured),
            legible_privar: legible(&v.privar),
            legible_oracle: legible(&v.oracle),
        };
        for (img, found) in [
            (&v.captured, &generated.legible_captured),
            (&v.privar, &generated.legible_privar),
            (&v.oracle, &generated.legible_oracle),
        ] {
            let s = &spec.script;
            scenarios.entry(img.fingerprint()).or_insert_with(|| MockScenario {
                fingerprint: img.fingerprint(),
                scene: s.scene.into(),
                topic: s.topic.into(),
                risk: s.risk,
                rationales: Rationales {
                    scene: s.rationales[0].into(),
                    topic: s.rationales[1].into(),
                    risk: s.rationales[2].into(),
                },
                caption: Some(s.caption.into()),
                items: Some(found.clone()),
            });
        }

        for (class, confidence, bbox) in &spec.objects {
            objects.push(RecordedDetection { frame_id: spec.id.into(), class_label: (*class).into(), confidence: *confidence, bbox: *bbox });
        }
        let probe_boxes = detect_heuristic(&v.captured, &config.detector);
        if probe_boxes.is_empty() {
            // an empty row keeps the frame present in the recording
            ocr.insert(spec.id, BoundingBox::new(0, 0, 1, 1), "");
        }
        for b in probe_boxes {
            ocr.insert(spec.id, b, &config.reader.read_region(&v.captured, b));
        }
        for (b, _, _) in &lines {
            text_boxes.push((spec.id.to_string(), *b, 0.9));
        }

        items.push(DatasetItem {
            id: spec.id.into(),
            image_path: rel,
            label: spec.label,
            scene: spec.scene,
            sensitive_types: spec.types.clone(),
            gt_boxes: Some(
                lines
                    .iter()
                    .filter(|l| l.2)
                    .map(|(b, t, _)| AnnotatedBox { bbox: *b, text: Some(t.to_string()) })
                    .collect(),
            ),
            transcript: (!lines.is_empty()).then(|| lines.iter().map(|l| l.1).collect::<Vec<_>>().join("\n")),
            fingerprint: source.fingerprint(),
        });
        report.push(generated);
    }

    let table = ScenarioTable::new(scenarios.into_values().collect()).map_err(pipe)?;
    write(&dir.join("scenarios.json"), serde_json::to_string_pretty(&table.to_vec()).map_err(pipe)? + "\n")?;
    RecordedDetections::new(objects).map_err(SynthError::Pipeline)?.write_csv(&dir.join("objects.csv")).map_err(pipe)?;
    ocr.write_csv(&dir.join("ocr.csv")).map_err(pipe)?;
    ExternalDetections::from_records("text_boxes.csv", text_boxes).write_csv(&dir.join("text_boxes.csv")).map_err(pipe)?;
    write(&dir.join("rules.json"), serde_json::to_string_pretty(&standard_rules()).map_err(pipe)? + "\n")?;

    let mut manifest = Manifest::new(items);
    manifest.sidecars = Sidecars {
        text_boxes: Some("text_boxes.csv".into()),
        objects: Some("objects.csv".into()),
        ocr: Some("ocr.csv".into()),
        scenarios: Some("scenarios.json".into()),
    };
    manifest.save(&dir.join("manifest.json")).map_err(pipe)?;
    manifest.root = dir.to_path_buf();
    Ok((manifest, report))
}

/// Mask area (pixels) each variant obfuscates, for breadth comparisons.
pub fn mask_area(boxes: &[BoundingBox], config: &FixtureConfig) -> usize {
    build_mask(boxes, WIDTH, HEIGHT, config.params.pad).count_ones()
}

const PAPER: [u8; 3] = [242, 240, 232];
const INK: [u8; 3] = [24, 24, 30];
const SCREEN: [u8; 3] = [20, 24, 36];
const GLOW: [u8; 3] = [200, 235, 210];

fn card(x: u32, y: u32, w: u32, h: u32, color: [u8; 3], ink: [u8; 3], lines: Vec<(&'static str, bool)>) -> Card {
    Card { x, y, w, h, color, ink, scale: 2, lines }
}

fn script(scene: &'static str, topic: &'static str, risk: bool, rationales: [&'static str; 3], caption: &'static str) -> Script {
    Script { scene, topic, risk, rationales, caption }
}

/// Twelve frames over four scenes: seven sensitive, five non-sensitive (three hard negatives).
pub fn mini_specs() -> Vec<ItemSpec> {
    use SensitiveType::*;
    vec![
        ItemSpec {
            id: "office-01",
            scene: Scene::Office,
            label: Label::Sensitive,
            types: vec![IdCard],
            cards: vec![card(40, 40, 236, 90, [226, 232, 244], INK, vec![("STAFF CARD", false), ("ID: 123-45-6789", true), ("NAME: J RIVERA", true)])],
            props: vec![Prop::Cup { x: 260, y: 150 }],
            script: script(
                "office",
                "identity card",
                true,
                ["a desk with a small laminated card and a coffee cup", "a wallet-sized card with several short lines is typically an identity card", "identity cards carry personal identifiers"],
                "an office desk with an ID card and a coffee cup",
            ),
            objects: vec![("id-card", 0.91, BoundingBox::new(40, 40, 236, 90)), ("cup", 0.88, BoundingBox::new(260, 150, 28, 26))],
        },
        ItemSpec {
            id: "office-02",
            scene: Scene::Office,
            label: Label::Sensitive,
            types: vec![OnScreenText],
            cards: vec![card(30, 24, 260, 110, SCREEN, GLOW, vec![("MAIL LOGIN", false), ("USER: ALEX", true), ("PASS: TULIP GARDEN", true)])],
            props: vec![Prop::Plant { x: 250, y: 150 }],
            script: script(
                "office",
                "login credentials on a monitor",
                true,
                ["a computer monitor on a desk next to a plant", "short labelled lines on a login screen are usually a username and password", "visible credentials could be captured by anyone nearby"],
                "a computer monitor on a desk next to a potted plant",
            ),
            objects: vec![("monitor", 0.86, BoundingBox::new(30, 24, 260, 110)), ("plant", 0.8, BoundingBox::new(250, 150, 34, 48))],
        },
        ItemSpec {
            id: "office-03",
            scene: Scene::Office,
            label: Label::NonSensitive,
            types: vec![],
            cards: vec![card(50, 30, 220, 120, PAPER, INK, vec![("DEEP NETS FOR", false), ("SCENE TEXT", false), ("ABSTRACT", false), ("WE STUDY TEXT", false)])],
            props: vec![Prop::Cup { x: 20, y: 160 }],
            script: script(
                "office",
                "printed document",
                true,
                ["a desk with a printed multi-line document", "a dense printed page could be a transcript or a report", "printed records may hold personal information"],
                "a printed research paper on an office desk",
            ),
            objects: vec![("document", 0.74, BoundingBox::new(50, 30, 220, 120)), ("cup", 0.9, BoundingBox::new(20, 160, 28, 26))],
        },
        ItemSpec {
            id: "living-01",
            scene: Scene::LivingRoom,
            label: Label::Sensitive,
            types: vec![CreditCard],
            cards: vec![card(30, 50, 260, 74, [40, 70, 140], [236, 236, 236], vec![("VISA", false), ("4111 1111 1111 1111", true)])],
            props: vec![Prop::Vase { x: 270, y: 140 }],
            script: script(
                "living room",
                "payment card",
                true,
                ["a coffee table with a blue plastic card and a vase", "a blue card with a long line of digit groups is a payment card", "card numbers enable fraud"],
                "a living room table with a blue credit card and a vase",
            ),
            objects: vec![("credit-card", 0.83, BoundingBox::new(30, 50, 260, 74)), ("vase", 0.77, BoundingBox::new(270, 140, 24, 40))],
        },
        ItemSpec {
            id: "living-02",
            scene: Scene::LivingRoom,
            label: Label::NonSensitive,
            types: vec![],
            cards: vec![card(70, 30, 180, 56, [250, 224, 160], [120, 40, 30], vec![("WELCOME HOME", false)])],
            props: vec![Prop::Chair { x: 40, y: 130 }, Prop::Plant { x: 240, y: 140 }],
            script: script(
                "living room",
                "decorative sign",
                false,
                ["a living room with a wall sign, a chair and a plant", "a single short line on a wall is usually a decorative sign", "decor carries no private information"],
                "a cozy living room with a welcome sign, a chair and a plant",
            ),
            objects: vec![("chair", 0.85, BoundingBox::new(40, 130, 36, 48)), ("plant", 0.81, BoundingBox::new(240, 140, 34, 48))],
        },
        ItemSpec {
            id: "living-03",
            scene: Scene::LivingRoom,
            label: Label::Sensitive,
            types: vec![Transcript],
            cards: vec![card(36, 20, 248, 130, PAPER, INK, vec![("TRANSCRIPT", false), ("GPA 3.91", true), ("CALCULUS: A", true), ("CHEMISTRY: B", true)])],
            props: vec![Prop::Cup { x: 280, y: 160 }],
            script: script(
                "living room",
                "academic transcript",
                true,
                ["a printed page with a short heading and graded lines on a table", "course names followed by letter grades form an academic transcript", "academic records are personal"],
                "a sheet of paper on a living room table next to a cup",
            ),
            objects: vec![("document", 0.69, BoundingBox::new(36, 20, 248, 130))],
        },
        ItemSpec {
            id: "bedroom-01",
            scene: Scene::Bedroom,
            label: Label::Sensitive,
            types: vec![PasswordNote],
            cards: vec![card(60, 40, 200, 74, [250, 238, 120], INK, vec![("WIFI", false), ("PASS: SUNFLOWER", true)])],
            props: vec![Prop::Vase { x: 20, y: 150 }],
            script: script(
                "bedroom",
                "password note",
                true,
                ["a yellow sticky note on a bedroom wall next to a vase", "a short handwritten note under a network name is usually a password", "written passwords grant access to accounts"],
                "a bedroom wall with a yellow sticky note and a vase",
            ),
            objects: vec![("vase", 0.79, BoundingBox::new(20, 150, 24, 40))],
        },
        ItemSpec {
            id: "bedroom-02",
            scene: Scene::Bedroom,
            label: Label::NonSensitive,
            types: vec![],
            cards: vec![card(80, 30, 160, 80, [120, 40, 40], [240, 220, 170], vec![("THE OLD MAN", false), ("AND THE SEA", false)])],
            props: vec![Prop::Plant { x: 260, y: 140 }],
            script: script(
                "bedroom",
                "book cover",
                false,
                ["a book lying on a bed with a plant nearby", "two large title lines on a cover are a book title", "book titles are public"],
                "a novel on a bed next to a houseplant",
            ),
            objects: vec![("book", 0.83, BoundingBox::new(80, 30, 160, 80)), ("plant", 0.78, BoundingBox::new(260, 140, 34, 48))],
        },
        ItemSpec {
            id: "bedroom-03",
            scene: Scene::Bedroom,
            label: Label::Sensitive,
            types: vec![MedicalReport],
            cards: vec![
                card(30, 24, 260, 110, PAPER, INK, vec![("CLINIC REPORT", false), ("DX: ASTHMA", true), ("RX: INHALER 2X", true)]),
                // faint pencil note the edge detector tends to miss
                card(30, 146, 216, 34, PAPER, [168, 168, 160], vec![("PORTAL: OWL NEST", true)]),
            ],
            props: vec![Prop::Chair { x: 270, y: 150 }],
            script: script(
                "bedroom",
                "medical report",
                true,
                ["a printed clinic letterhead on a bedside table", "short coded lines under a clinic heading are a diagnosis and prescription", "health information is highly sensitive"],
                "a bedroom with a printed page on the nightstand and a chair",
            ),
            objects: vec![("document", 0.66, BoundingBox::new(30, 24, 260, 110)), ("chair", 0.84, BoundingBox::new(270, 150, 36, 48))],
        },
        ItemSpec {
            id: "cafe-01",
            scene: Scene::Cafe,
            label: Label::NonSensitive,
            types: vec![],
            cards: vec![card(50, 20, 220, 130, [30, 34, 30], [236, 236, 220], vec![("MENU", false), ("LATTE 4.50", false), ("MOCHA 5.00", false), ("TEA 3.25", false)])],
            props: vec![Prop::Cup { x: 20, y: 160 }],
            script: script(
                "café",
                "menu board",
                false,
                ["a café counter with a chalk menu board and a cup", "item names with prices form a menu", "menus are public"],
                "a café menu board above the counter with a cup",
            ),
            objects: vec![("cup", 0.92, BoundingBox::new(20, 160, 28, 26)), ("document", 0.55, BoundingBox::new(50, 20, 220, 130))],
        },
        ItemSpec {
            id: "cafe-02",
            scene: Scene::Cafe,
            label: Label::Sensitive,
            types: vec![OnScreenText],
            cards: vec![card(70, 30, 180, 110, SCREEN, GLOW, vec![("MESSAGES", false), ("CALL MOM", true), ("555-123-4567", true)])],
            props: vec![Prop::Cup { x: 270, y: 150 }],
            script: script(
                "café",
                "phone messages",
                true,
                ["a phone screen on a café table beside a cup", "a messaging screen shows a contact and a phone number", "contacts and numbers are personal"],
                "a smartphone lying on a café table next to a cup",
            ),
            objects: vec![("phone", 0.87, BoundingBox::new(70, 30, 180, 110)), ("cup", 0.9, BoundingBox::new(270, 150, 28, 26))],
        },
        ItemSpec {
            id: "cafe-03",
            scene: Scene::Cafe,
            label: Label::NonSensitive,
            types: vec![],
            cards: vec![card(60, 30, 200, 80, [236, 238, 240], [30, 60, 140], vec![("TODAY", false), ("OPEN MIC", false)])],
            props: vec![Prop::Chair { x: 20, y: 150 }],
            script: script(
                "café",
                "event announcement",
                false,
                ["a whiteboard on a café wall next to a chair", "a short heading and an event name announce an event", "public announcements are not private"],
                "a café whiteboard announcing an open mic, with a chair",
            ),
            objects: vec![("laptop", 0.62, BoundingBox::new(150, 160, 80, 40)), ("chair", 0.88, BoundingBox::new(20, 150, 36, 48))],
        },
    ]
}

/// Sensitive notes written as plain words (no digits), plus two ordinary negatives.
pub fn password_note_specs() -> Vec<ItemSpec> {
    let note = |id: &'static str, scene: Scene, lines: Vec<(&'static str, bool)>| ItemSpec {
        id,
        scene,
        label: Label::Sensitive,
        types: vec![SensitiveType::PasswordNote],
        cards: vec![card(50, 36, 220, 110, [250, 238, 120], INK, lines)],
        props: vec![Prop::Cup { x: 280, y: 170 }],
        script: script(
            scene.as_str(),
            "password note",
            true,
            ["a sticky note stuck near a workspace", "a few words under an account name on a sticky note are a password", "written passwords grant access to accounts"],
            "a yellow sticky note near a cup",
        ),
        objects: vec![("cup", 0.9, BoundingBox::new(280, 170, 28, 26))],
    };
    let plain = |id: &'static str, scene: Scene, lines: Vec<(&'static str, bool)>| ItemSpec {
        id,
        scene,
        label: Label::NonSensitive,
        types: vec![],
        cards: vec![card(50, 36, 220, 110, PAPER, INK, lines)],
        props: vec![Prop::Plant { x: 270, y: 150 }],
        script: script(
            scene.as_str(),
            "shopping list",
            false,
            ["a note on a table next to a plant", "a list of food words is a shopping list", "groceries are not private"],
            "a note next to a plant",
        ),
        objects: vec![],
    };
    vec![
        note("note-01", Scene::Office, vec![("BANK LOGIN", false), ("BLUE HORSE", true)]),
        note("note-02", Scene::Bedroom, vec![("EMAIL", false), ("PASS: SECRET", true), ("MAPLE SYRUP", true)]),
        note("note-03", Scene::LivingRoom, vec![("ROUTER", false), ("KEY: OPEN SESAME", true)]),
        note("note-04", Scene::Cafe, vec![("LAPTOP PIN", false), ("RED FOX", true)]),
        plain("list-01", Scene::Office, vec![("BUY MILK", false), ("EGGS", false)]),
        plain("list-02", Scene::Cafe, vec![("BREAD", false), ("APPLES", false)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_fixture_shape() {
        let dir = tempfile::tempdir().unwrap();
        let config = FixtureConfig::default();
        let (manifest, report) = generate(dir.path(), &mini_specs(), &config).unwrap();
        assert_eq!(manifest.items.len(), 12);
        for g in &report {
            assert_eq!(g.legible_captured.len(), g.gt.len(), "{}: every sensitive line readable before obfuscation", g.id);
            assert!(g.legible_oracle.is_empty(), "{}: oracle masks leave nothing legible", g.id);
        }
        let leaked: Vec<&str> = report.iter().filter(|g| !g.legible_privar.is_empty()).map(|g| g.id.as_str()).collect();
        assert_eq!(leaked, vec!["bedroom-03"]);
        let reloaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(reloaded.items, manifest.items);
    }

    #[test]
    fn password_notes_are_legible_prose() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, report) = generate(dir.path(), &password_note_specs(), &FixtureConfig::default()).unwrap();
        for (item, g) in manifest.items.iter().zip(&report) {
            assert_eq!(g.legible_captured.len(), g.gt.len(), "{}", g.id);
            assert!(!item.transcript.as_deref().unwrap_or("").chars().any(|c| c.is_ascii_digit()));
        }
    }
}
