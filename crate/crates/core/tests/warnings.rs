//! Warning rendering against an independent rasterization of each mode's footprint.

use proptest::prelude::*;

use privar_core::assessment::RiskAssessment;
use privar_core::imaging::{BoundingBox, Image};
use privar_core::warning::{flash_visible, render_warning, warning_geometry, FlashSchedule, WarningMode};

fn risky(regions: Vec<BoundingBox>) -> RiskAssessment {
    RiskAssessment {
        frame_id: "w".into(),
        scene_label: "office".into(),
        scene_rationale: String::new(),
        topic_inference: String::new(),
        risk: true,
        risk_rationale: String::new(),
        regions,
        backend_id: "mock".into(),
    }
}

fn gradient_frame(w: u32, h: u32) -> Image {
    let px = (0..h).flat_map(|y| (0..w).flat_map(move |x| [(x * 3 % 200) as u8 + 20, (y * 5 % 200) as u8 + 20, 90])).collect();
    Image::new(w, h, 3, px).unwrap()
}

fn changed(a: &Image, b: &Image) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.pixel(x, y) != b.pixel(x, y) {
                v.push((x, y));
            }
        }
    }
    v
}

#[test]
fn region_overlay_changes_exactly_the_outline_bands() {
    let frame = gradient_frame(160, 120);
    let regions = vec![BoundingBox::new(10, 12, 60, 20), BoundingBox::new(90, 70, 40, 30)];
    let out = render_warning(&frame, &risky(regions.clone()), WarningMode::RegionOverlay, 0.2, &FlashSchedule::default()).unwrap();
    let mut want = Vec::new();
    for y in 0..120u32 {
        for x in 0..160u32 {
            let on_band = regions.iter().any(|r| {
                let inside = x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
                inside && (x < r.x + 3 || x + 3 >= r.x + r.w || y < r.y + 3 || y + 3 >= r.y + r.h)
            });
            if on_band {
                want.push((x, y));
                assert_eq!(out.pixel(x, y), [255, 0, 0]);
            }
        }
    }
    assert_eq!(changed(&frame, &out), want);
}

#[test]
fn schedule_on_a_tenth_second_grid() {
    let s = FlashSchedule::default();
    for k in 0..=80 {
        let t = k as f64 / 10.0;
        // count in tenths to avoid float drift in the reference
        let want = k < 60 && (k % 20) < 10;
        assert_eq!(flash_visible(t, &s), want, "t={t}");
    }
}

fn mode() -> impl Strategy<Value = WarningMode> {
    prop_oneof![Just(WarningMode::CenterScreen), Just(WarningMode::TopScreen), Just(WarningMode::RegionOverlay)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn rendering_stays_inside_its_geometry(
        w in 40u32..200, h in 30u32..150, m in mode(),
        raw in proptest::collection::vec((0u32..200, 0u32..150, 1u32..80, 1u32..60), 0..4),
        t in 0.0f64..8.0,
    ) {
        let frame = gradient_frame(w, h);
        let regions: Vec<BoundingBox> = raw.into_iter().map(|(x, y, bw, bh)| BoundingBox::new(x, y, bw, bh)).collect();
        let out = render_warning(&frame, &risky(regions.clone()), m, t, &FlashSchedule::default()).unwrap();
        let geometry = warning_geometry(m, w, h, &regions);
        for (x, y) in changed(&frame, &out) {
            prop_assert!(geometry.iter().any(|g| g.contains(x, y)), "({x},{y}) outside {m:?} geometry");
        }
        if !flash_visible(t, &FlashSchedule::default()) {
            prop_assert_eq!(out, frame);
        }
    }
}
