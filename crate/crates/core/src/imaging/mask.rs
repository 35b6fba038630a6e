//! Rasterized text-region mask.

use super::BoundingBox;

/// One bit per pixel; set iff the pixel lies in the padded union of boxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn fill_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32) {
        let w = self.width as usize;
        for y in y0..y1 {
            let row = y as usize * w;
            self.bits[row + x0 as usize..row + x1 as usize].fill(true);
        }
    }
}

/// Builds the mask from `boxes`, each dilated by `pad` pixels and clamped to the image.
pub fn build_mask(boxes: &[BoundingBox], width: u32, height: u32, pad: u32) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    for b in boxes {
        let x0 = b.x.saturating_sub(pad).min(width);
        let y0 = b.y.saturating_sub(pad).min(height);
        let x1 = b.right().saturating_add(pad).min(width);
        let y1 = b.bottom().saturating_add(pad).min(height);
        if x1 > x0 && y1 > y0 {
            mask.fill_rect(x0, y0, x1, y1);
        }
    }
    mask
}
