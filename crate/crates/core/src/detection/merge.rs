use crate::imaging::BoundingBox;

fn sort_key(b: &BoundingBox) -> (u32, u32, u32, u32) {
    (b.y, b.x, b.h, b.w)
}

pub(crate) fn sort_boxes(boxes: &mut [BoundingBox]) {
    boxes.sort_by_key(sort_key);
}

/// Repeatedly replaces the highest-IoU pair at or above `iou_threshold` with its
/// union rectangle until no pair qualifies. Ties go to the earliest pair in
/// `(y, x)` order. Output is sorted by `(y, x)`.
pub fn merge_boxes(boxes: &[BoundingBox], iou_threshold: f64) -> Vec<BoundingBox> {
    let mut current: Vec<BoundingBox> = boxes.to_vec();
    sort_boxes(&mut current);
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let iou = current[i].iou(&current[j]);
                if iou >= iou_threshold && best.is_none_or(|(_, _, b)| iou > b) {
                    best = Some((i, j, iou));
                }
            }
        }
        let Some((i, j, _)) = best else { break };
        let merged = current[i].union(&current[j]);
        current.remove(j);
        current[i] = merged;
        sort_boxes(&mut current);
    }
    current
}
